import csv

import pytest

from ibfd_dcf import experiments as ex
from ibfd_dcf.aggregation import RhoSpec
from ibfd_dcf.cli import EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_SOLVER, main
from ibfd_dcf.config import ENV_VAR
from ibfd_dcf.errors import InvalidParameterError

SMALL = dict(runs=2, horizon=2000)


@pytest.fixture(autouse=True)
def fresh_cache(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    ex.clear_cache()
    yield
    ex.clear_cache()


def test_builtin_grids():
    specs = ex.builtin_specs()
    assert set(specs) == {"fig5", "fig6", "fig7", "fig8", "table2", "table3", "table4"}
    for name in ("fig5", "fig6", "fig7", "fig8"):
        assert specs[name].sweep == tuple(range(2, 21, 2))
    assert [v.name for v in specs["fig5"].variants] == ["hd", "ibfd", "ibfd_dual", "ibfd_multi", "ibfd_rho1"]
    assert specs["fig7"].runs == 200 and specs["fig7"].variants[0].rho.is_random
    assert specs["fig5"].master_seed == specs["fig7"].master_seed == 12345


def test_fig5_rows_sorted_and_complete():
    spec = ex.with_overrides(ex.builtin_specs()["fig5"], **SMALL)
    rows = ex.run_experiment(spec)
    assert len(rows) == 100
    assert rows == sorted(rows, key=ex.ResultRow.sort_key)
    assert all(r.sim_mean > 0 and r.analytical > 0 and r.sim_stderr >= 0 for r in rows)


def test_csv_round_trip(tmp_path):
    spec = ex.with_overrides(ex.builtin_specs()["fig6"], **SMALL)
    rows = ex.run_experiment(spec)
    path = tmp_path / "sub" / "fig6.csv"
    ex.emit_csv(rows, path)
    back = ex.read_csv(path)
    assert list(back[0]) == list(ex.CSV_HEADER)
    assert len(back) == 50
    for r, d in zip(rows, back):
        assert float(d["analytical"]) == r.analytical and float(d["sim_mean"]) == r.sim_mean
        assert int(d["n"]) == r.n and d["variant"] == r.variant
        assert float(d["rel_err"]) == pytest.approx(abs(r.analytical - r.sim_mean) / r.sim_mean)


def test_table_rows_have_empty_sim_columns(tmp_path):
    rows = ex.run_experiment(ex.builtin_specs()["table3"])
    assert len(rows) == 36
    ex.emit_csv(rows, tmp_path / "t3.csv")
    back = ex.read_csv(tmp_path / "t3.csv")
    assert all(d["n"] == "" and d["sim_mean"] == "" and d["rel_err"] == "" for d in back)
    cell = {(d["variant"], d["metric"]): float(d["analytical"]) for d in back}
    assert cell[("multi@rho=0.1", "gamma")] == 10.0
    assert cell[("dual@rho=0.5", "rho_new")] == 1.0


def test_plot_data(tmp_path):
    spec = ex.with_overrides(ex.builtin_specs()["fig7"], **SMALL)
    rows = ex.run_experiment(spec)
    files = ex.emit_plot_data(rows, tmp_path, stderr_columns=spec.plot_stderr)
    names = sorted(f.name for f in files)
    assert names == ["fig7_throughput_mbps_analytical.dat", "fig7_throughput_mbps_sim.dat"]
    analytic = (tmp_path / names[0]).read_text().splitlines()
    sim = (tmp_path / names[1]).read_text().splitlines()
    assert analytic[0] == "# n hd ibfd ibfd_dual ibfd_multi"
    assert sim[0].split()[1:] == ["n", "hd", "ibfd", "ibfd_dual", "ibfd_multi",
                                  "hd_stderr", "ibfd_stderr", "ibfd_dual_stderr", "ibfd_multi_stderr"]
    assert len(analytic) == 11 and all(len(line.split()) == 5 for line in analytic[1:])
    assert all(len(line.split()) == 9 for line in sim[1:])
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "fig7_throughput_mbps_sim.dat" in manifest


def test_variant_parse():
    v = ex.Variant.parse("m=ibfd/multi/deterministic:0.3")
    assert v == ex.Variant("m", "ibfd", "multi", RhoSpec.deterministic(0.3))
    with pytest.raises(InvalidParameterError):
        ex.Variant.parse("ibfd/multi")


def test_spec_validation():
    v = ex.Variant("a", "ibfd", "none", RhoSpec.deterministic(0.3))
    with pytest.raises(InvalidParameterError):
        ex.ExperimentSpec("x", (), (v,))
    with pytest.raises(InvalidParameterError):
        ex.ExperimentSpec("x", (2,), ())
    with pytest.raises(InvalidParameterError):
        ex.ExperimentSpec("x", (2,), (v, v))
    with pytest.raises(InvalidParameterError):
        ex.ExperimentSpec("x", (2,), (v,), outputs=("goodput",))


def test_pooled():
    # sqrt(1 * 1.5**2 + 9 * 0.5**2) / 4
    assert ex.pooled([1.0, 3.0], [1, 3]) == (2.5, pytest.approx(4.5**0.5 / 4))
    assert ex.pooled([2.0], [5]) == (2.0, 0.0)


# ---- command line -------------------------------------------------------------

def test_solve_and_oracle(capsys):
    assert main(["solve", "--n", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "p_ap=0.0" in out and "throughput_mbps=" in out
    assert main(["oracle", "--windows", "4,8", "--p", "0.5", "--beta", "0.5"]) == EXIT_OK
    assert "max_abs_diff" in capsys.readouterr().out


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--n", "4", "--horizon", "3000", "--runs", "2", "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.count("time_conserved=True") == 2
    rows = ex.read_csv(out)
    assert {r["metric"] for r in rows} == {"throughput_mbps", "latency_us"}


def test_experiment_command(tmp_path):
    assert main(["experiment", "fig6", "--runs", "1", "--horizon", "1000", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "fig6.csv").exists()
    assert (tmp_path / "plots" / "fig6_latency_us_sim.dat").exists()
    assert main(["experiment", "table2", "--out", str(tmp_path)]) == EXIT_OK
    rows = {(r["variant"], r["metric"]): float(r["analytical"]) for r in ex.read_csv(tmp_path / "table2.csv")}
    assert rows[("multi", "eta_pct")] == pytest.approx(95.0)


def test_experiment_from_file(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nname = mine\nsweep = 2,4\nruns = 1\nhorizon = 1000\n"
                   "variants = a=ibfd/none/deterministic:0.5, b=hd/none/uniform:0.1:0.9:step0.1\n")
    assert main(["experiment", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "mine.csv")))
    assert len(rows) == 8 and {r["variant"] for r in rows} == {"a", "b"}


def test_empty_sweep_is_invalid(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nsweep = ,\nvariants = a=ibfd/none/deterministic:0.5\n")
    assert main(["experiment", str(cfg), "--out", str(tmp_path)]) == EXIT_INVALID


def test_config_from_environment(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[scenario]\nn = 3\nduplex = hd\n")
    monkeypatch.setenv(ENV_VAR, str(cfg))
    assert main(["solve"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("n=3 duplex=hd")


@pytest.mark.parametrize("argv,code", [
    (["solve", "--n", "1"], EXIT_INVALID),
    (["solve", "--n", "4", "--rho", "deterministic:2"], EXIT_INVALID),
    (["solve", "--duplex", "fd"], EXIT_INVALID),
    (["bogus"], EXIT_INVALID),
    (["experiment", "fig99"], EXIT_INVALID),
    (["oracle", "--windows", "4,12"], EXIT_INVALID),
    (["oracle", "--tol", "1e-300"], EXIT_SOLVER),
    (["solve", "--config", "/nonexistent/c.ini"], EXIT_IO),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["experiment", "table2", "--out", str(blocker / "x")]) == EXIT_IO
