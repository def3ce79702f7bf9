"""Full-duplex DCF model: backoff chain with reply-back exits, AP/STA fixed point, metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidParameterError, ModelInconsistencyError
from .params import BackoffParams, PhyMacParams, t_collision_us, t_success_us


@dataclass(frozen=True)
class ChainParams:
    """One node's chain: collision probability p and reply-back probability beta."""

    p: float
    beta: float
    backoff: BackoffParams

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise InvalidParameterError(f"p must lie in [0, 1), got {self.p!r}")
        if not 0 <= self.beta <= 1:
            raise InvalidParameterError(f"beta must lie in [0, 1], got {self.beta!r}")

    @property
    def alpha(self) -> float:
        return 1.0 - self.beta


@dataclass(frozen=True)
class IbfdSolution:
    tau_ap: float
    tau_sta: float
    p_ap: float
    p_sta: float
    beta_ap: float
    beta_sta: float
    n: int

    @property
    def alpha_ap(self) -> float:
        return 1.0 - self.beta_ap

    @property
    def alpha_sta(self) -> float:
        return 1.0 - self.beta_sta

    @property
    def tau_avg(self) -> float:
        return self.tau_ap / self.n + (self.n - 1) * self.tau_sta / self.n


@dataclass(frozen=True)
class IbfdMetrics:
    p_s: float
    p_tr: float
    throughput_mbps: float
    latency_us: float
    exp_payload_bytes: float


def _stage_terms(alpha: float, w: int) -> tuple[float, float]:
    """(h, e) for a stage of window w.

    h = mean over entry counters of alpha^k: chance a uniform entry reaches counter 0.
    e = mean visits spent in the stage per entry. Both are finite polynomials
    in alpha, so alpha -> 1 needs no special casing.
    """
    powers = np.power(alpha, np.arange(w, dtype=float))
    h = float(powers.sum()) / w
    e = float(((w - np.arange(w)) * powers).sum()) / w
    return h, e


def _all_stage_terms(chain: ChainParams):
    terms = [_stage_terms(chain.alpha, w) for w in chain.backoff.windows]
    return np.array([t[0] for t in terms]), np.array([t[1] for t in terms])


def stage_ratios(chain: ChainParams) -> np.ndarray:
    """b_{i,0} / b_{0,0} for i = 0..m, i.e. (p/(1-alpha))^i prod_{j=1..i} (1-alpha^W_j)/W_j."""
    h, _ = _all_stage_terms(chain)
    m = len(h) - 1
    out = np.ones(m + 1)
    for i in range(1, m + 1):
        out[i] = out[i - 1] * chain.p * h[i]
    return out


def b00(chain: ChainParams, tau: float) -> float:
    """Closed-form b_{0,0} given the node's direct-transmission probability tau."""
    if not 0 <= tau <= 1:
        raise InvalidParameterError("tau must lie in [0, 1]")
    h, _ = _all_stage_terms(chain)
    m = len(h) - 1
    # (1-alpha^W)/W = (1-alpha) h, so the (1-alpha) factors cancel against p/(1-alpha).
    numer = h[0] * ((chain.alpha - chain.p) * tau + chain.beta)
    denom = 1.0 - chain.p ** (m + 1) * float(np.prod(h))
    if denom <= 0:
        raise ModelInconsistencyError("b00 denominator is not positive")
    value = numer / denom
    if not value > 0:
        raise ModelInconsistencyError(f"b00 evaluated to {value!r}")
    return value


def b_i0(chain: ChainParams, b_00: float) -> np.ndarray:
    """Stage-wise transmission-state probabilities b_{0,0}..b_{m,0}."""
    return b_00 * stage_ratios(chain)


def tau_from_chain(chain: ChainParams) -> float:
    """Direct-transmission probability of the chain.

    Substituting b00(tau) into tau = b00 * sum_i b_{i,0}/b_{0,0} and dividing out
    the common stage-0 entry rate gives
    tau = sum_i p^i prod_{j<=i} h_j / sum_i p^i prod_{j<i} h_j e_i,
    which stays well conditioned as beta -> 0.
    """
    h, e = _all_stage_terms(chain)
    reach = 1.0  # p^i prod_{j<i} h_j
    numer = 0.0
    denom = 0.0
    for hi, ei in zip(h, e):
        numer += reach * hi
        denom += reach * ei
        reach *= chain.p * hi
    return float(numer / denom)


def _check_n(n):
    if n < 2:
        raise InvalidParameterError("an IBFD network needs the AP and at least one STA (n >= 2)")


def beta_ap(tau_sta: float, n: int) -> float:
    _check_n(n)
    return (n - 1) * tau_sta * (1.0 - tau_sta) ** (n - 2)


def beta_sta(tau_ap: float, tau_sta: float, n: int) -> float:
    _check_n(n)
    return tau_ap * (1.0 - tau_sta) ** (n - 2) / (n - 1)


def p_ap(tau_sta: float, n: int) -> float:
    """AP collides unless no STA transmits or exactly one (its addressee replies in kind)."""
    _check_n(n)
    q = 1.0 - tau_sta
    return max(0.0, 1.0 - (q ** (n - 1) + tau_sta * q ** (n - 2)))


def p_sta(tau_ap: float, tau_sta: float, n: int) -> float:
    _check_n(n)
    q = 1.0 - tau_sta
    return max(0.0, 1.0 - ((1.0 - tau_ap) * q ** (n - 2) + tau_ap * q ** (n - 2) / (n - 1)))


def solve_ibfd(n: int, backoff: BackoffParams, tol: float = 1e-10, max_iter: int = 20_000,
               damping: float = 0.5, tau0: float = 0.1) -> IbfdSolution:
    """Damped Gauss-Seidel sweeps over (beta, p, tau) for AP and STA chains."""
    _check_n(n)
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    t_ap = t_sta = tau0
    trace = []
    residual = float("inf")
    for _ in range(max_iter):
        b_a = beta_ap(t_sta, n)
        pa = p_ap(t_sta, n)
        new_ap = tau_from_chain(ChainParams(pa, b_a, backoff))
        t_ap_next = (1.0 - damping) * t_ap + damping * new_ap
        b_s = beta_sta(t_ap_next, t_sta, n)
        ps = p_sta(t_ap_next, t_sta, n)
        new_sta = tau_from_chain(ChainParams(ps, b_s, backoff))
        residual = max(abs(new_ap - t_ap), abs(new_sta - t_sta))
        trace.append(residual)
        if residual < tol:
            t_ap, t_sta = new_ap, new_sta
            return IbfdSolution(
                tau_ap=t_ap,
                tau_sta=t_sta,
                p_ap=p_ap(t_sta, n),
                p_sta=p_sta(t_ap, t_sta, n),
                beta_ap=beta_ap(t_sta, n),
                beta_sta=beta_sta(t_ap, t_sta, n),
                n=n,
            )
        t_ap = t_ap_next
        t_sta = (1.0 - damping) * t_sta + damping * new_sta
    raise ConvergenceError(f"IBFD fixed point did not converge for n={n}", residual, trace[-50:])


def success_event_probabilities(tau_ap: float, tau_sta: float, n: int) -> dict[str, float]:
    """Unconditional per-slot probabilities of the disjoint successful outcomes.

    ap_only: the AP alone transmits (its addressee replies back).
    sta_only: one STA alone transmits (the AP replies back).
    mutual: the AP and exactly one STA transmit, and that STA is the AP's addressee.
    """
    _check_n(n)
    qa, qs = 1.0 - tau_ap, 1.0 - tau_sta
    return {
        "ap_only": tau_ap * qs ** (n - 1),
        "sta_only": (n - 1) * tau_sta * qa * qs ** (n - 2),
        "mutual": tau_ap * tau_sta * qs ** (n - 2),
    }


def p_tr_ibfd(sol: IbfdSolution) -> float:
    return 1.0 - (1.0 - sol.tau_ap) * (1.0 - sol.tau_sta) ** (sol.n - 1)


def p_success_ibfd(sol: IbfdSolution) -> float:
    """P(success | some direct transmission), summed over the disjoint success outcomes."""
    p_tr = p_tr_ibfd(sol)
    if not p_tr > 0:
        raise ModelInconsistencyError("success probability is undefined when nobody transmits")
    total = sum(success_event_probabilities(sol.tau_ap, sol.tau_sta, sol.n).values())
    return min(total / p_tr, 1.0)


def ibfd_throughput_mbps(params: PhyMacParams, sol: IbfdSolution, phi: float) -> float:
    """Mbit/s; every exchange is sized by the AP's MPDU_max frame, UL rides along as phi."""
    if not 0 <= phi <= 1:
        raise InvalidParameterError("phi must lie in [0, 1]")
    p_tr = p_tr_ibfd(sol)
    p_s = p_success_ibfd(sol)
    mpdu = params.mpdu_max_bytes
    ts = t_success_us(params, mpdu)
    tc = t_collision_us(params, mpdu)
    denom = (1.0 - p_tr) * params.slot_us + p_tr * p_s * ts + p_tr * (1.0 - p_s) * tc
    return p_s * p_tr * 8.0 * mpdu * (1.0 + phi) / denom


def ibfd_latency_us(n: int, s_mbps: float, phi: float, exp_gamma: float, mpdu_max: float) -> float:
    """Little's law with n head-of-line aggregates, each carrying 1 + gamma frames."""
    if not s_mbps > 0:
        raise ModelInconsistencyError("latency is undefined at zero throughput")
    if exp_gamma < 1:
        raise InvalidParameterError("exp_gamma must be >= 1")
    return n * 8.0 * mpdu_max * (1.0 + phi) / ((1.0 + exp_gamma) * s_mbps)


def ibfd_metrics(params: PhyMacParams, sol: IbfdSolution, phi: float,
                 exp_gamma: float = 1.0) -> IbfdMetrics:
    s = ibfd_throughput_mbps(params, sol, phi)
    return IbfdMetrics(
        p_s=p_success_ibfd(sol),
        p_tr=p_tr_ibfd(sol),
        throughput_mbps=s,
        latency_us=ibfd_latency_us(sol.n, s, phi, exp_gamma, params.mpdu_max_bytes),
        exp_payload_bytes=float(params.mpdu_max_bytes),
    )
