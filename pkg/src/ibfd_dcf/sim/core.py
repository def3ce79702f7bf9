"""Scenario definition, single runs and seeded replications."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..aggregation import MODES, RhoSpec, TrafficProfile
from ..errors import InvalidParameterError
from ..params import BackoffParams, PhyMacParams, t_collision_us, t_success_us, to_ns
from . import kernels as K

DUPLEX = ("hd", "ibfd")


@dataclass(frozen=True)
class Scenario:
    n: int
    duplex: str = "ibfd"
    aggregation: str = "none"
    rho: RhoSpec = field(default_factory=lambda: RhoSpec.deterministic(0.3))
    phy: PhyMacParams = field(default_factory=PhyMacParams)
    backoff: BackoffParams | None = None
    horizon: int = 500_000
    seed: int = 12345
    runs: int = 1
    drop_latency: str = "carry"

    def __post_init__(self):
        if self.duplex not in DUPLEX:
            raise InvalidParameterError(f"duplex must be one of {DUPLEX}, got {self.duplex!r}")
        if self.aggregation not in MODES:
            raise InvalidParameterError(f"aggregation must be one of {MODES}")
        if self.duplex == "hd" and self.aggregation != "none":
            raise InvalidParameterError("aggregation needs full-duplex reply-back; use duplex=ibfd")
        if self.n < (2 if self.duplex == "ibfd" else 1):
            raise InvalidParameterError(f"n={self.n} is too small for {self.duplex}")
        if self.runs < 1 or self.horizon < 1:
            raise InvalidParameterError("runs and horizon must be >= 1")
        if self.drop_latency not in ("carry", "reset"):
            raise InvalidParameterError("drop_latency must be 'carry' or 'reset'")
        if self.backoff is None:
            object.__setattr__(self, "backoff", BackoffParams.from_phy(self.phy))


@dataclass
class SimStats:
    """Counters of one run. Times are integer nanoseconds; ``*_us`` properties convert.

    ``attempts`` counts contention wins and losses (one per channel event a node
    transmits in); HD back-to-back frames after a zero backoff draw are
    counted in ``consecutive`` instead.
    """

    elapsed_ns: int
    idle_ns: int
    busy_success_ns: int
    busy_collision_ns: int
    events: int
    collisions: int
    successes: int
    dl_frames: int
    ul_frames: int
    dl_bits: int
    ul_bits: int
    latency_sum_ns: int
    latency_count: int
    attempts: np.ndarray
    node_successes: np.ndarray
    failures: np.ndarray
    drops: np.ndarray
    replies: np.ndarray
    consecutive: np.ndarray
    rhos: tuple[float, ...] = ()
    gammas: tuple[int, ...] = ()

    @property
    def idle_us(self) -> float:
        return self.idle_ns / 1000.0

    @property
    def busy_success_us(self) -> float:
        return self.busy_success_ns / 1000.0

    @property
    def busy_collision_us(self) -> float:
        return self.busy_collision_ns / 1000.0

    @property
    def latency_sum_us(self) -> float:
        return self.latency_sum_ns / 1000.0

    def empirical_tau(self) -> np.ndarray:
        """Per node: fraction of channel events with a direct transmission."""
        return self.attempts / self.events

    def collision_frequency(self) -> np.ndarray:
        """Per node: fraction of its transmissions that collided."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.attempts > 0, self.failures / np.maximum(self.attempts, 1), 0.0)


def throughput_mbps(stats: SimStats) -> float:
    """Delivered payload bits per µs."""
    if stats.elapsed_ns <= 0:
        raise InvalidParameterError("no simulated time elapsed")
    return (stats.dl_bits + stats.ul_bits) * 1000.0 / stats.elapsed_ns


def mean_latency_us(stats: SimStats) -> float:
    if stats.latency_count <= 0:
        raise InvalidParameterError("no frame was delivered")
    return stats.latency_sum_ns / stats.latency_count / 1000.0


def _streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # the children ss.spawn(2) would give on a fresh sequence, without mutating ss
    rho_ss, sim_ss = (np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (k,), pool_size=ss.pool_size)
                      for k in range(2))
    return np.random.default_rng(rho_ss), np.random.Generator(np.random.Philox(sim_ss))


def sample_traffic(scenario: Scenario, seed) -> TrafficProfile:
    rho_rng, _ = _streams(seed)
    return TrafficProfile(tuple(float(r) for r in scenario.rho.sample(rho_rng, scenario.n - 1)),
                          scenario.aggregation)


def run(scenario: Scenario, seed=None, traffic: TrafficProfile | None = None) -> SimStats:
    """One run. ``seed`` is an int or SeedSequence (default: the scenario seed).

    The seed splits into a stream for the STA ratios and one for the event
    loop, so variants sharing a seed see the same ratios.
    """
    seed = scenario.seed if seed is None else seed
    rho_rng, sim_rng = _streams(seed)
    n = scenario.n
    if n > 1 and traffic is None:
        rhos = scenario.rho.sample(rho_rng, n - 1)
        traffic = TrafficProfile(tuple(float(r) for r in rhos), scenario.aggregation)
    if traffic is not None and len(traffic.rhos) != n - 1:
        raise InvalidParameterError(f"traffic has {len(traffic.rhos)} STAs, expected {n - 1}")
    phy = scenario.phy
    mpdu = phy.mpdu_max_bytes
    totals = np.zeros(K.N_TOTALS, np.int64)
    nodes = np.zeros((K.N_FIELDS, n), np.int64)
    drop_reset = scenario.drop_latency == "reset"
    if scenario.duplex == "hd":
        windows = np.array(scenario.backoff.hd_windows, np.int64)
        loads = [mpdu] + [int(round(r * mpdu)) for r in (traffic.rhos if traffic else ())]
        load_bytes = np.array(loads, np.int64)
        ts = np.array([to_ns(t_success_us(phy, b)) for b in loads], np.int64)
        tc = np.array([to_ns(t_collision_us(phy, b)) for b in loads], np.int64)
        K.run_hd_kernel(sim_rng, windows, load_bytes, ts, tc, to_ns(phy.slot_us),
                        scenario.horizon, drop_reset, totals, nodes)
    else:
        windows = np.array(scenario.backoff.windows, np.int64)
        ul_bytes = np.zeros(n, np.int64)
        ul_frames = np.zeros(n, np.int64)
        for j, (g, r) in enumerate(zip(traffic.gammas, traffic.rhos_new), start=1):
            ul_bytes[j] = int(round(r * mpdu))
            ul_frames[j] = g
        K.run_ibfd_kernel(sim_rng, windows, mpdu, ul_bytes, ul_frames,
                          to_ns(t_success_us(phy, mpdu)), to_ns(t_collision_us(phy, mpdu)),
                          to_ns(phy.slot_us), scenario.horizon, drop_reset, totals, nodes)
    return SimStats(
        elapsed_ns=int(totals[K.T_ELAPSED]),
        idle_ns=int(totals[K.T_IDLE]),
        busy_success_ns=int(totals[K.T_BUSY_SUCCESS]),
        busy_collision_ns=int(totals[K.T_BUSY_COLLISION]),
        events=int(totals[K.T_EVENTS]),
        collisions=int(totals[K.T_COLLISIONS]),
        successes=int(totals[K.T_SUCCESSES]),
        dl_frames=int(totals[K.T_DL_FRAMES]),
        ul_frames=int(totals[K.T_UL_FRAMES]),
        dl_bits=int(totals[K.T_DL_BITS]),
        ul_bits=int(totals[K.T_UL_BITS]),
        latency_sum_ns=int(totals[K.T_LAT_SUM]),
        latency_count=int(totals[K.T_LAT_COUNT]),
        attempts=nodes[K.N_ATTEMPTS].copy(),
        node_successes=nodes[K.N_SUCCESSES].copy(),
        failures=nodes[K.N_FAILURES].copy(),
        drops=nodes[K.N_DROPS].copy(),
        replies=nodes[K.N_REPLIES].copy(),
        consecutive=nodes[K.N_CONSECUTIVE].copy(),
        rhos=traffic.rhos if traffic else (),
        gammas=traffic.gammas if traffic else (),
    )


def run_seed(master: int, n: int, index: int) -> np.random.SeedSequence:
    """Seed of replication ``index`` at network size ``n``.

    Every (n, index) pair gets an independent child of the master seed, so
    sweep points do not share ratio draws; variants at the same point do.
    """
    return np.random.SeedSequence(master, spawn_key=(n, index))


def mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InvalidParameterError("no values to summarize")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


@dataclass
class Replications:
    scenario: Scenario
    runs: list[SimStats]

    @property
    def throughputs(self) -> np.ndarray:
        return np.array([throughput_mbps(s) for s in self.runs])

    @property
    def latencies(self) -> np.ndarray:
        return np.array([mean_latency_us(s) for s in self.runs])

    def throughput(self) -> tuple[float, float]:
        return mean_stderr(self.throughputs)

    def latency(self) -> tuple[float, float]:
        return mean_stderr(self.latencies)


def run_replications(scenario: Scenario) -> Replications:
    """``scenario.runs`` independent runs seeded by :func:`run_seed`."""
    return Replications(scenario, [run(scenario, run_seed(scenario.seed, scenario.n, i))
                                   for i in range(scenario.runs)])
