"""Command line: ``ibfd-dcf {solve,simulate,experiment,oracle}``.

Exit codes: 0 ok, 2 invalid input, 3 solver or model failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .aggregation import RhoSpec
from .chain import stationary_oracle
from .config import ENV_VAR, Config, load_config, parse_config
from .errors import ConvergenceError, InvalidParameterError, ModelInconsistencyError
from .ibfd import ChainParams, b00, b_i0, tau_from_chain
from .params import BackoffParams
from .sim import Scenario, mean_latency_us, throughput_mbps

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _scenario_from(cfg: Config, args) -> Scenario:
    sc = dict(cfg.scenario)
    for key in ("n", "duplex", "aggregation", "rho", "horizon", "runs", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            sc[key] = str(value)
    try:
        return Scenario(
            n=int(sc.get("n", 10)),
            duplex=sc.get("duplex", "ibfd"),
            aggregation=sc.get("aggregation", "none"),
            rho=RhoSpec.parse(sc.get("rho", "deterministic:0.3")),
            phy=cfg.phy,
            backoff=cfg.backoff,
            horizon=int(sc.get("horizon", ex.DETERMINISTIC_HORIZON)),
            seed=int(sc.get("seed", ex.MASTER_SEED)),
            runs=int(sc.get("runs", 1)),
            drop_latency=sc.get("drop_latency", "carry"),
        )
    except ValueError as exc:
        raise InvalidParameterError(f"[scenario]: {exc}") from None


def _single_spec(cfg, scenario, args, name):
    variant = ex.Variant(f"{scenario.duplex}_{scenario.aggregation}", scenario.duplex,
                         scenario.aggregation, scenario.rho)
    return ex.ExperimentSpec(name, (scenario.n,), (variant,), runs=scenario.runs,
                             master_seed=scenario.seed, horizon=scenario.horizon, phy=cfg.phy,
                             backoff=cfg.backoff, tol=1e-10 if args.tol is None else args.tol)


def cmd_solve(cfg, args):
    scenario = _scenario_from(cfg, args)
    spec = _single_spec(cfg, scenario, args, "solve")
    s, d = ex.analytical_metrics(spec, spec.variants[0], scenario.n)
    print(f"n={scenario.n} duplex={scenario.duplex} aggregation={scenario.aggregation} rho={scenario.rho}")
    if scenario.duplex == "hd":
        sol = ex._solve_hd(scenario.n, cfg.backoff, tol=spec.tol)
        print(f"tau={sol.tau!r} p={sol.p!r}")
    else:
        sol = ex._solve_ibfd(scenario.n, cfg.backoff, tol=spec.tol)
        print(f"tau_ap={sol.tau_ap!r} tau_sta={sol.tau_sta!r} p_ap={sol.p_ap!r} p_sta={sol.p_sta!r}")
        print(f"beta_ap={sol.beta_ap!r} beta_sta={sol.beta_sta!r} tau_avg={sol.tau_avg!r}")
    print(f"throughput_mbps={s!r}")
    print(f"latency_us={d!r}")
    return EXIT_OK


def cmd_simulate(cfg, args):
    scenario = _scenario_from(cfg, args)
    spec = _single_spec(cfg, scenario, args, "simulate")
    rows = ex.run_experiment(spec)
    reps = ex.replications(scenario)
    for i, st in enumerate(reps.runs):
        conserved = st.elapsed_ns == st.idle_ns + st.busy_success_ns + st.busy_collision_ns
        print(f"run {i}: throughput_mbps={throughput_mbps(st)!r} latency_us={mean_latency_us(st)!r} "
              f"collisions={st.collisions} time_conserved={conserved}")
    _write_rows(rows, args.out, "simulate")
    return EXIT_OK


def _write_rows(rows, out, name):
    if out is None:
        sys.stdout.write(ex.csv_text(rows))
        return
    out = Path(out)
    if out.suffix == ".csv":
        ex.emit_csv(rows, out)
    else:
        ex.emit_csv(rows, out / f"{name}.csv")


def cmd_experiment(cfg, args):
    builtins = ex.builtin_specs()
    if args.name in builtins:
        base = builtins[args.name]
        if cfg.path is not None:
            base = ex.replace(base, phy=cfg.phy, backoff=cfg.backoff)
    else:
        path = Path(args.name)
        if not path.exists():
            raise InvalidParameterError(
                f"{args.name!r} is neither a built-in experiment ({', '.join(builtins)}) nor a file"
            )
        base = ex.spec_from_config(parse_config(path.read_text(), path))
    spec = ex.with_overrides(base, seed=args.seed, runs=args.runs, horizon=args.horizon, tol=args.tol)
    rows = ex.run_experiment(spec)
    out = Path(args.out or "results")
    ex.emit_csv(rows, out / f"{spec.name}.csv")
    if spec.kind == "sweep":
        ex.emit_plot_data(rows, out / "plots", stderr_columns=spec.plot_stderr)
    rel = [r.rel_err for r in rows if r.rel_err is not None]
    print(f"{spec.name}: {len(rows)} rows -> {out / (spec.name + '.csv')}")
    if rel:
        print(f"mean rel_err {np.mean(rel):.4%}, max {np.max(rel):.4%}")
    return EXIT_OK


def cmd_oracle(cfg, args):
    windows = tuple(int(w) for w in args.windows.split(","))
    w0 = windows[0]
    m = len(windows) - 1
    backoff = BackoffParams(w0=w0, m=m, r=m, cw_max=windows[-1])
    if backoff.windows != windows:
        raise InvalidParameterError(f"windows must double from W0 up to CW_max, got {windows}")
    tol = 1e-10 if args.tol is None else args.tol
    chain = ChainParams(args.p, args.beta, backoff)
    pi = stationary_oracle(chain)
    tau = float(tau_from_chain(chain))
    closed = [float(b) for b in b_i0(chain, b00(chain, tau))]
    worst = max(abs(closed[i] - pi[(i, 0)]) for i in range(m + 1))
    total = sum(pi.values())
    print(f"states={len(pi)} sum_pi={total!r}")
    for i in range(m + 1):
        print(f"b_{i},0 closed={closed[i]!r} oracle={pi[(i, 0)]!r}")
    print(f"tau closed={tau!r} max_abs_diff={worst!r}")
    if worst > tol or abs(total - 1.0) > 1e-12:
        raise ModelInconsistencyError(f"closed form disagrees with the oracle by {worst:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ibfd-dcf", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"INI config file (default: ${ENV_VAR})")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--runs", type=int, help="replications per point")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--tol", type=float, help="solver / oracle tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--n", type=int)
        p.add_argument("--duplex", choices=("hd", "ibfd"))
        p.add_argument("--aggregation", choices=("none", "dual", "multi"))
        p.add_argument("--rho", help="deterministic:<v> or uniform:<lo>:<hi>:step<s>")
        p.add_argument("--horizon", type=int, help="channel events per run")

    p = sub.add_parser("solve", parents=[common], help="analytical model only")
    scenario_flags(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("simulate", parents=[common], help="simulate one scenario")
    scenario_flags(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("experiment", parents=[common], help="run a built-in grid or an experiment file")
    p.add_argument("name", help=", ".join(ex.builtin_specs()) + ", or a path")
    p.add_argument("--horizon", type=int, help="channel events per run")
    p.set_defaults(func=cmd_experiment)
    p = sub.add_parser("oracle", parents=[common], help="closed-form chain vs dense stationary solve")
    p.add_argument("--windows", default="4,8,16", help="comma-separated window ladder")
    p.add_argument("--p", type=float, default=0.3)
    p.add_argument("--beta", type=float, default=0.1)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, ModelInconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
