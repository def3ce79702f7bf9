"""Half-duplex 802.11 DCF saturation model (refined-τ variant with consecutive-transmission corrections)."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidParameterError, ModelInconsistencyError
from .params import BackoffParams, PhyMacParams, t_collision_us, t_success_us

UNIFORM = "uniform"

# Expected max load of two STAs drawing rho uniformly from {0.1, ..., 0.9},
# as a fraction of MPDU_max, and its complement.
_UNIFORM_PAIR_MAX = 0.6481
_UNIFORM_AP_EXCESS = 0.3519


@dataclass(frozen=True)
class HdSolution:
    tau: float
    p: float
    n: int
    backoff: BackoffParams


@dataclass(frozen=True)
class HdMetrics:
    p_s: float
    p_tr: float
    exp_payload_bytes: float
    exp_collision_bytes: float
    throughput_mbps: float
    latency_us: float


def tau_hd(p: float, backoff: BackoffParams) -> float:
    """Per-slot transmission probability given conditional collision probability ``p``."""
    if not 0 <= p < 1:
        raise InvalidParameterError(f"p must lie in [0, 1), got {p!r}")
    windows = np.asarray(backoff.hd_windows, dtype=float)
    r = backoff.r
    powers = p ** np.arange(r + 1)
    weight = (1.0 - p) / (1.0 - p ** (r + 1))
    mean_backoff = weight * float(np.sum(powers * (windows - 1.0) / 2.0))
    return 1.0 / (1.0 + mean_backoff - (1.0 - p) / 2.0)


def p_hd(tau: float, n: int) -> float:
    return 1.0 - (1.0 - tau) ** (n - 1)


def solve_hd(n: int, backoff: BackoffParams, tol: float = 1e-10, max_iter: int = 10_000,
             damping: float = 0.5, tau0: float = 0.1) -> HdSolution:
    """Damped Picard iteration on tau -> tau_hd(p_hd(tau))."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    tau = tau0
    residual = float("inf")
    trace = []
    for _ in range(max_iter):
        target = tau_hd(p_hd(tau, n), backoff)
        residual = abs(target - tau)
        trace.append(residual)
        if residual < tol:
            tau = target
            return HdSolution(tau=tau, p=p_hd(tau, n), n=n, backoff=backoff)
        tau = (1.0 - damping) * tau + damping * target
    raise ConvergenceError(f"HD fixed point did not converge for n={n}", residual, trace[-50:])


def solve_hd_bisection(n: int, backoff: BackoffParams, tol: float = 1e-14) -> HdSolution:
    """Independent cross-check: bisection on g(tau) = tau_hd(p_hd(tau)) - tau.

    g(0+) > 0 and g(1) < 0, and g is strictly decreasing, so the root is unique.
    """
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p = p_hd(mid, n)
        g = (tau_hd(p, backoff) if p < 1 else 0.0) - mid
        if g > 0:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    return HdSolution(tau=tau, p=p_hd(tau, n), n=n, backoff=backoff)


def hd_transmission_probability(tau: float, n: int) -> float:
    return 1.0 - (1.0 - tau) ** n


def hd_success_probability(tau: float, n: int) -> float:
    """P(exactly one transmitter | at least one)."""
    if not 0 <= tau <= 1 or n < 1:
        raise InvalidParameterError("need 0 <= tau <= 1 and n >= 1")
    if tau == 0:
        raise ModelInconsistencyError("success probability is undefined when nobody transmits")
    if n == 1:
        return 1.0
    p_tr = hd_transmission_probability(tau, n)
    return n * tau * (1.0 - tau) ** (n - 1) / p_tr


def hd_expected_payload_bytes(n: int, mean_rho: float, mpdu_max: float) -> float:
    """Mean frame size of a successful sender: the AP sends MPDU_max, each STA rho_i * MPDU_max."""
    if n < 1 or not 0 <= mean_rho <= 1:
        raise InvalidParameterError("need n >= 1 and 0 <= mean_rho <= 1")
    return min((1.0 + (n - 1) * mean_rho) / n, 1.0) * mpdu_max


def expected_max_collision_load(tau: float, loads: Sequence[float]) -> float:
    """E[max load over transmitters | at least two transmit], every node transmitting w.p. tau.

    Sorting loads in decreasing order, the max is load k exactly when node k is
    the first transmitter in that order and somebody after it transmits too.
    """
    ordered = np.sort(np.asarray(loads, dtype=float))[::-1]
    n = len(ordered)
    if n < 2:
        raise InvalidParameterError("a collision needs at least two nodes")
    if not 0 < tau < 1:
        raise InvalidParameterError("tau must lie in (0, 1)")
    q = 1.0 - tau
    k = np.arange(n)
    weights = q**k * tau * (1.0 - q ** (n - 1 - k))
    total = float(weights.sum())
    if total <= 0:
        raise ModelInconsistencyError("no probability mass on multi-transmitter slots")
    return float(weights @ ordered) / total


def ap_collision_fraction(tau: float, n: int) -> float:
    """P(the AP is among the colliders | a collision happens)."""
    denom = 1.0 - (1.0 - tau) ** n - n * tau * (1.0 - tau) ** (n - 1)
    if denom <= 0:
        raise ModelInconsistencyError("no probability mass on multi-transmitter slots")
    return tau * (1.0 - (1.0 - tau) ** (n - 1)) / denom


def hd_expected_collision_bytes(tau: float, n: int, rho: float | Sequence[float] | str,
                                mpdu_max: float) -> float:
    """Expected size of the longest frame in a collision.

    ``rho`` is ``"uniform"`` (rho drawn from the 0.1 grid: the two-collider
    approximation with its tabulated constants), a single STA ratio, or one
    ratio per STA (exact enumeration).
    """
    if n < 2:
        raise InvalidParameterError("collisions need n >= 2")
    if not 0 < tau < 1:
        raise InvalidParameterError("tau must lie in (0, 1)")
    if isinstance(rho, str):
        if rho != UNIFORM:
            raise InvalidParameterError(f"unknown rho regime {rho!r}")
        q = ap_collision_fraction(tau, n)
        return (_UNIFORM_AP_EXCESS * q + _UNIFORM_PAIR_MAX) * mpdu_max
    sta = [float(rho)] * (n - 1) if np.isscalar(rho) else [float(r) for r in rho]
    if len(sta) != n - 1:
        raise InvalidParameterError(f"expected {n - 1} STA ratios, got {len(sta)}")
    return expected_max_collision_load(tau, [1.0] + sta) * mpdu_max


def hd_throughput_from_parts(params: PhyMacParams, sol: HdSolution, exp_payload: float,
                             exp_collision: float) -> tuple[float, float, float]:
    """Returns (S in Mbit/s, P_s, P_tr)."""
    n, tau = sol.n, sol.tau
    w = sol.backoff.w0
    p_tr = hd_transmission_probability(tau, n)
    p_s = hd_success_probability(tau, n)
    burst = w / (w - 1.0)
    payload_bits = 8.0 * exp_payload * burst
    ts = t_success_us(params, exp_payload) * burst + params.slot_us
    tc = (t_collision_us(params, exp_collision) + params.slot_us) if n > 1 else 0.0
    denom = (1.0 - p_tr) * params.slot_us + p_tr * p_s * ts + p_tr * (1.0 - p_s) * tc
    return p_s * p_tr * payload_bits / denom, p_s, p_tr


def hd_metrics(params: PhyMacParams, sol: HdSolution,
               rho: float | Sequence[float] | str = UNIFORM) -> HdMetrics:
    """Throughput and latency of the HD network; ``rho`` as in :func:`hd_expected_collision_bytes`."""
    n = sol.n
    if isinstance(rho, str):
        mean_rho = 0.5 if rho == UNIFORM else None
        if mean_rho is None:
            raise InvalidParameterError(f"unknown rho regime {rho!r}")
    elif np.isscalar(rho):
        mean_rho = float(rho)
    else:
        mean_rho = float(np.mean(rho)) if len(rho) else 0.0
    exp_payload = hd_expected_payload_bytes(n, mean_rho, params.mpdu_max_bytes)
    exp_collision = (
        hd_expected_collision_bytes(sol.tau, n, rho, params.mpdu_max_bytes) if n > 1 else 0.0
    )
    s, p_s, p_tr = hd_throughput_from_parts(params, sol, exp_payload, exp_collision)
    return HdMetrics(
        p_s=p_s,
        p_tr=p_tr,
        exp_payload_bytes=exp_payload,
        exp_collision_bytes=exp_collision,
        throughput_mbps=s,
        latency_us=hd_latency_us(n, s, exp_payload),
    )


def hd_throughput_mbps(params: PhyMacParams, sol: HdSolution,
                       rho: float | Sequence[float] | str = UNIFORM) -> float:
    return hd_metrics(params, sol, rho).throughput_mbps


def hd_latency_us(n: int, throughput_mbps: float, exp_payload_bytes: float) -> float:
    """Little's law with n saturated head-of-line frames: D = n / (S / E[P])."""
    if not throughput_mbps > 0:
        raise ModelInconsistencyError("latency is undefined at zero throughput")
    return n * 8.0 * exp_payload_bytes / throughput_mbps
