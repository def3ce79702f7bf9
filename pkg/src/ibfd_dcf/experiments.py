"""Experiment grids: analytical vs simulated tables, CSV and plot-data output."""

from __future__ import annotations

import csv
import io
import math
from functools import lru_cache
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .aggregation import MODES, RHO_GRID, RhoSpec, TrafficProfile, aggregate, expected_gamma, expected_phi, utilization
from .config import Config, parse_sweep
from .errors import InvalidParameterError
from .hd import UNIFORM, hd_metrics, solve_hd
from .ibfd import ibfd_metrics, solve_ibfd
from .params import BackoffParams, PhyMacParams
from .sim import Replications, Scenario, mean_stderr, run_replications

MASTER_SEED = 12345
DETERMINISTIC_RUNS = 4
DETERMINISTIC_HORIZON = 500_000
RANDOM_RUNS = 200
RANDOM_HORIZON = 50_000

THROUGHPUT = "throughput_mbps"
LATENCY = "latency_us"
SWEEP_METRICS = (THROUGHPUT, LATENCY)

CSV_HEADER = ("experiment", "variant", "n", "metric", "analytical", "sim_mean", "sim_stderr", "rel_err")


@dataclass(frozen=True)
class Variant:
    name: str
    duplex: str
    aggregation: str
    rho: RhoSpec

    @classmethod
    def parse(cls, text: str) -> "Variant":
        """``label=duplex/aggregation/rho-spec``, e.g. ``multi=ibfd/multi/deterministic:0.3``."""
        try:
            label, body = text.split("=", 1)
            duplex, aggregation, rho = body.split("/", 2)
        except ValueError:
            raise InvalidParameterError(f"cannot parse variant {text!r}") from None
        return cls(label.strip(), duplex.strip(), aggregation.strip(), RhoSpec.parse(rho))


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    sweep: tuple[int, ...]
    variants: tuple[Variant, ...]
    outputs: tuple[str, ...] = SWEEP_METRICS
    runs: int = DETERMINISTIC_RUNS
    master_seed: int = MASTER_SEED
    horizon: int = DETERMINISTIC_HORIZON
    kind: str = "sweep"
    plot_stderr: bool = False
    phy: PhyMacParams = field(default_factory=PhyMacParams)
    backoff: BackoffParams | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if not self.sweep:
            raise InvalidParameterError(f"experiment {self.name!r} has an empty sweep")
        if not self.variants:
            raise InvalidParameterError(f"experiment {self.name!r} has no variants")
        if self.kind not in ("sweep", "table2", "table3", "table4"):
            raise InvalidParameterError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "sweep":
            for metric in self.outputs:
                if metric not in SWEEP_METRICS:
                    raise InvalidParameterError(f"unknown metric {metric!r}")
        if self.runs < 1 or self.horizon < 1:
            raise InvalidParameterError("runs and horizon must be >= 1")
        if self.backoff is None:
            object.__setattr__(self, "backoff", BackoffParams.from_phy(self.phy))
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise InvalidParameterError("variant names must be unique")

    def scenario(self, variant: Variant, n: int) -> Scenario:
        return Scenario(n=n, duplex=variant.duplex, aggregation=variant.aggregation, rho=variant.rho,
                        phy=self.phy, backoff=self.backoff, horizon=self.horizon,
                        seed=self.master_seed, runs=self.runs)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    variant: str
    n: int | None
    metric: str
    analytical: float | None
    sim_mean: float | None = None
    sim_stderr: float | None = None

    @property
    def rel_err(self) -> float | None:
        if self.analytical is None or self.sim_mean is None or self.sim_mean == 0:
            return None
        return abs(self.analytical - self.sim_mean) / abs(self.sim_mean)

    def sort_key(self):
        return (self.experiment, self.variant, -1 if self.n is None else self.n, self.metric)


# ---- built-in grids ---------------------------------------------------------

_SWEEP = tuple(range(2, 21, 2))
_RHO03 = RhoSpec.deterministic(0.3)
_UNIFORM_RHO = RhoSpec.uniform(RHO_GRID)

_DET_VARIANTS = (
    Variant("hd", "hd", "none", _RHO03),
    Variant("ibfd", "ibfd", "none", _RHO03),
    Variant("ibfd_dual", "ibfd", "dual", _RHO03),
    Variant("ibfd_multi", "ibfd", "multi", _RHO03),
    Variant("ibfd_rho1", "ibfd", "none", RhoSpec.deterministic(1.0)),
)
_RANDOM_VARIANTS = (
    Variant("hd", "hd", "none", _UNIFORM_RHO),
    Variant("ibfd", "ibfd", "none", _UNIFORM_RHO),
    Variant("ibfd_dual", "ibfd", "dual", _UNIFORM_RHO),
    Variant("ibfd_multi", "ibfd", "multi", _UNIFORM_RHO),
)
_MODE_VARIANTS_03 = tuple(Variant(m, "ibfd", m, _RHO03) for m in MODES)
_MODE_VARIANTS_UNIFORM = tuple(Variant(m, "ibfd", m, _UNIFORM_RHO) for m in MODES)

FIGURES = {"fig5": "throughput vs n, rho = 0.3", "fig6": "latency vs n, rho = 0.3",
           "fig7": "throughput vs n, uniform random rho", "fig8": "latency vs n, uniform random rho"}


def builtin_specs() -> dict[str, ExperimentSpec]:
    det = dict(sweep=_SWEEP, runs=DETERMINISTIC_RUNS, horizon=DETERMINISTIC_HORIZON)
    rnd = dict(sweep=_SWEEP, runs=RANDOM_RUNS, horizon=RANDOM_HORIZON, plot_stderr=True)
    return {
        "fig5": ExperimentSpec("fig5", variants=_DET_VARIANTS, outputs=(THROUGHPUT, LATENCY), **det),
        "fig6": ExperimentSpec("fig6", variants=_DET_VARIANTS, outputs=(LATENCY,), **det),
        "fig7": ExperimentSpec("fig7", variants=_RANDOM_VARIANTS, outputs=(THROUGHPUT,), **rnd),
        "fig8": ExperimentSpec("fig8", variants=_RANDOM_VARIANTS, outputs=(LATENCY,), **rnd),
        "table2": ExperimentSpec("table2", variants=_MODE_VARIANTS_03, kind="table2",
                                 outputs=("gamma", "rho_new", "phi", "eta_pct"), **det),
        "table3": ExperimentSpec("table3", variants=_MODE_VARIANTS_03[1:], kind="table3",
                                 outputs=("gamma", "rho_new"), **det),
        "table4": ExperimentSpec("table4", variants=_MODE_VARIANTS_UNIFORM, kind="table4",
                                 outputs=("exp_gamma", "phi", "eta_pct"),
                                 **{k: v for k, v in rnd.items() if k != "plot_stderr"}),
    }


def spec_from_config(cfg: Config) -> ExperimentSpec:
    """Custom sweep described by an [experiment] section."""
    ex = cfg.experiment
    if "variants" not in ex or "sweep" not in ex:
        raise InvalidParameterError("[experiment] needs 'sweep' and 'variants'")
    variants = tuple(Variant.parse(v) for v in ex["variants"].replace("\n", ",").split(",") if v.strip())
    random = any(v.rho.is_random for v in variants)
    try:
        runs = int(ex.get("runs", RANDOM_RUNS if random else DETERMINISTIC_RUNS))
        seed = int(ex.get("seed", MASTER_SEED))
        horizon = int(ex.get("horizon", RANDOM_HORIZON if random else DETERMINISTIC_HORIZON))
    except ValueError as exc:
        raise InvalidParameterError(f"[experiment]: {exc}") from None
    metrics = tuple(m.strip() for m in ex.get("metrics", ",".join(SWEEP_METRICS)).split(",") if m.strip())
    plot_stderr = ex.get("plot_stderr", str(random)).strip().lower() in ("1", "true", "yes")
    return ExperimentSpec(ex.get("name", "custom"), parse_sweep(ex["sweep"]), variants, metrics,
                          runs, seed, horizon, plot_stderr=plot_stderr, phy=cfg.phy,
                          backoff=cfg.backoff)


# ---- analytical side --------------------------------------------------------

_solve_hd = lru_cache(maxsize=None)(solve_hd)
_solve_ibfd = lru_cache(maxsize=None)(solve_ibfd)


def analytical_metrics(spec: ExperimentSpec, variant: Variant, n: int,
                       traffic: TrafficProfile | None = None) -> tuple[float, float]:
    """(throughput Mbit/s, latency µs) of the matching model.

    With ``traffic`` the model is conditioned on those per-STA ratios; otherwise
    the variant's ratio spec is used (uniform -> expected-value formulas).
    """
    phy, backoff = spec.phy, spec.backoff
    if variant.duplex == "hd":
        sol = _solve_hd(n, backoff, tol=spec.tol)
        if traffic is not None:
            rho = list(traffic.rhos)
        elif variant.rho.is_random:
            rho = UNIFORM
        else:
            rho = variant.rho.values[0]
        m = hd_metrics(phy, sol, rho if n > 1 else [])
        return m.throughput_mbps, m.latency_us
    sol = _solve_ibfd(n, backoff, tol=spec.tol)
    if traffic is not None:
        phi, gamma = traffic.phi, traffic.exp_gamma
    else:
        values, probs = variant.rho.distribution()
        phi = expected_phi(variant.aggregation, values, probs)
        gamma = expected_gamma(variant.aggregation, values, probs)
    m = ibfd_metrics(phy, sol, phi, gamma)
    return m.throughput_mbps, m.latency_us


# ---- simulation side, memoized per process ----------------------------------

_CACHE: dict[Scenario, Replications] = {}


def replications(scenario: Scenario) -> Replications:
    """Cached :func:`run_replications`; runs are pure functions of the scenario."""
    if scenario not in _CACHE:
        _CACHE[scenario] = run_replications(scenario)
    return _CACHE[scenario]


def clear_cache():
    _CACHE.clear()


# ---- experiment runners -----------------------------------------------------

def _sweep_rows(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    for variant in spec.variants:
        for n in spec.sweep:
            reps = replications(spec.scenario(variant, n))
            if variant.rho.is_random:
                pairs = [analytical_metrics(spec, variant, n, _traffic_of(s, variant))
                         for s in reps.runs]
                analytic = {THROUGHPUT: float(np.mean([p[0] for p in pairs])),
                            LATENCY: float(np.mean([p[1] for p in pairs]))}
            else:
                s, d = analytical_metrics(spec, variant, n)
                analytic = {THROUGHPUT: s, LATENCY: d}
            simulated = {THROUGHPUT: reps.throughput(), LATENCY: reps.latency()}
            for metric in spec.outputs:
                mean, se = simulated[metric]
                rows.append(ResultRow(spec.name, variant.name, n, metric, analytic[metric], mean, se))
    return rows


def _traffic_of(stats, variant):
    return TrafficProfile(stats.rhos, variant.aggregation) if stats.rhos else None


def _table2_rows(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    for variant in spec.variants:
        rho = variant.rho.values[0]
        gamma, rho_new = aggregate(variant.aggregation, rho)
        values = {"gamma": float(gamma), "rho_new": rho_new, "phi": rho_new, "eta_pct": utilization(rho_new)}
        rows += [ResultRow(spec.name, variant.name, None, k, values[k]) for k in spec.outputs]
    return rows


def _table3_rows(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    for variant in spec.variants:
        for rho in RHO_GRID:
            gamma, rho_new = aggregate(variant.aggregation, rho)
            label = f"{variant.name}@rho={rho!r}"
            values = {"gamma": float(gamma), "rho_new": rho_new}
            rows += [ResultRow(spec.name, label, None, k, values[k]) for k in spec.outputs]
    return rows


def pooled(values, weights) -> tuple[float, float]:
    """Weighted mean and its standard error (weights treated as fixed)."""
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    mean = float(np.sum(w * x) / np.sum(w))
    se = float(np.sqrt(np.sum(w**2 * (x - mean) ** 2)) / np.sum(w)) if x.size > 1 else 0.0
    return mean, se


def measured_traffic(spec: ExperimentSpec, variant: Variant) -> dict[str, tuple[float, float]]:
    """E[gamma] and Phi measured from delivered traffic across the sweep's runs.

    Per run: UL frames per DL frame and UL bits per DL bit. Runs are pooled
    with weight n - 1, the number of STA ratios each run sampled.
    """
    gammas, phis, weights = [], [], []
    for n in spec.sweep:
        for s in replications(spec.scenario(variant, n)).runs:
            gammas.append(s.ul_frames / s.dl_frames)
            phis.append(s.ul_bits / s.dl_bits)
            weights.append(n - 1)
    gamma = pooled(gammas, weights)
    phi = pooled(phis, weights)
    eta = (utilization(phi[0]), 50.0 * phi[1])
    return {"exp_gamma": gamma, "phi": phi, "eta_pct": eta}


def _table4_rows(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    for variant in spec.variants:
        values, probs = variant.rho.distribution()
        phi = expected_phi(variant.aggregation, values, probs)
        analytic = {"exp_gamma": expected_gamma(variant.aggregation, values, probs), "phi": phi,
                    "eta_pct": utilization(phi)}
        measured = measured_traffic(spec, variant)
        for k in spec.outputs:
            mean, se = measured[k]
            rows.append(ResultRow(spec.name, variant.name, None, k, analytic[k], mean, se))
    return rows


_RUNNERS = {"sweep": _sweep_rows, "table2": _table2_rows, "table3": _table3_rows, "table4": _table4_rows}


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """All rows of the experiment, sorted by (experiment, variant, n, metric)."""
    return sorted(_RUNNERS[spec.kind](spec), key=ResultRow.sort_key)


def with_overrides(spec: ExperimentSpec, seed=None, runs=None, horizon=None, tol=None) -> ExperimentSpec:
    changes = {k: v for k, v in (("master_seed", seed), ("runs", runs), ("horizon", horizon), ("tol", tol))
               if v is not None}
    return replace(spec, **changes) if changes else spec


# ---- output -----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def csv_text(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(rows, key=ResultRow.sort_key):
        writer.writerow([r.experiment, r.variant, _fmt(r.n), r.metric, _fmt(r.analytical),
                         _fmt(r.sim_mean), _fmt(r.sim_stderr), _fmt(r.rel_err)])
    return buf.getvalue()


def emit_csv(rows: list[ResultRow], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plot_data(rows: list[ResultRow], path, stderr_columns: bool = False) -> list[Path]:
    """One whitespace-separated file per (experiment, metric, source); x = n.

    ``source`` is ``analytical`` or ``sim``. Sim files gain a ``<variant>_stderr``
    column per variant when ``stderr_columns`` is set. A ``manifest.txt`` maps
    files to figures. Rows without n (tables) are skipped.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    swept = [r for r in rows if r.n is not None]
    written = []
    manifest = []
    for exp, metric in sorted({(r.experiment, r.metric) for r in swept}):
        subset = [r for r in swept if r.experiment == exp and r.metric == metric]
        variants = list(dict.fromkeys(r.variant for r in sorted(subset, key=ResultRow.sort_key)))
        ns = sorted({r.n for r in subset})
        table = {(r.variant, r.n): r for r in subset}
        for source in ("analytical", "sim"):
            cols = ["n"] + variants
            if source == "sim" and stderr_columns:
                cols += [f"{v}_stderr" for v in variants]
            lines = ["# " + " ".join(cols)]
            for n in ns:
                vals = [str(n)]
                for v in variants:
                    r = table.get((v, n))
                    vals.append(_fmt(None if r is None else (r.analytical if source == "analytical" else r.sim_mean)) or "nan")
                if source == "sim" and stderr_columns:
                    for v in variants:
                        r = table.get((v, n))
                        vals.append(_fmt(None if r is None else r.sim_stderr) or "nan")
                lines.append(" ".join(vals))
            fname = out / f"{exp}_{metric}_{source}.dat"
            fname.write_text("\n".join(lines) + "\n")
            written.append(fname)
            manifest.append(f"{fname.name}\t{exp}\t{FIGURES.get(exp, exp)}\t{metric}\t{source}")
    (out / "manifest.txt").write_text("# file\texperiment\tfigure\tmetric\tsource\n" + "\n".join(manifest) + "\n")
    return written
