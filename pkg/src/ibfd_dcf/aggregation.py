"""UL/DL symmetry ratios and the two UL frame-aggregation rules."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

MODES = ("none", "dual", "multi")
RHO_GRID = tuple(k / 10 for k in range(1, 10))
RHO_MIN, RHO_MAX = 0.1, 0.9
_EPS = 1e-12


def _check_grid_rho(rho):
    if not RHO_MIN - _EPS <= rho <= RHO_MAX + _EPS:
        raise InvalidParameterError(f"rho must lie in [{RHO_MIN}, {RHO_MAX}], got {rho!r}")


def _check_rho(rho):
    if not 0 < rho <= 1:
        raise InvalidParameterError(f"rho must lie in (0, 1], got {rho!r}")


def gamma_dual(rho: float) -> tuple[int, float]:
    """STAs at or below half load double their UL frame."""
    _check_grid_rho(rho)
    if rho <= 0.5 + _EPS:
        return 2, round(2 * rho, 12)
    return 1, rho


def gamma_multi(rho: float) -> tuple[int, float]:
    """Pack as many UL frames as fit under one DL frame: gamma = floor(1/rho)."""
    _check_grid_rho(rho)
    gamma = max(1, math.floor(1.0 / rho + 1e-9))
    return gamma, round(gamma * rho, 12)


def aggregate(mode: str, rho: float) -> tuple[int, float]:
    if mode == "none":
        _check_rho(rho)
        return 1, rho
    if mode == "dual":
        return gamma_dual(rho)
    if mode == "multi":
        return gamma_multi(rho)
    raise InvalidParameterError(f"unknown aggregation mode {mode!r}; expected one of {MODES}")


def fdf(rhos: Sequence[float]) -> float:
    """Full-duplex factor: mean STA symmetry ratio."""
    if len(rhos) == 0:
        raise InvalidParameterError("need at least one STA ratio")
    return float(np.mean(rhos))


def utilization(phi: float) -> float:
    """Link utilization in percent: the share of both directions carrying payload."""
    if not 0 <= phi <= 1:
        raise InvalidParameterError("phi must lie in [0, 1]")
    return (1.0 + phi) / 2.0 * 100.0


@dataclass(frozen=True)
class RhoSpec:
    """Either one fixed ratio for every STA or a uniform draw from a grid."""

    kind: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("deterministic", "uniform"):
            raise InvalidParameterError(f"unknown rho kind {self.kind!r}")
        if not self.values:
            raise InvalidParameterError("rho spec has no values")
        if self.kind == "deterministic" and len(self.values) != 1:
            raise InvalidParameterError("deterministic rho takes exactly one value")
        for v in self.values:
            _check_rho(v)

    @classmethod
    def deterministic(cls, value: float) -> "RhoSpec":
        return cls("deterministic", (float(value),))

    @classmethod
    def uniform(cls, values: Sequence[float] = RHO_GRID) -> "RhoSpec":
        return cls("uniform", tuple(float(v) for v in values))

    @classmethod
    def parse(cls, text: str) -> "RhoSpec":
        """``deterministic:<v>`` or ``uniform:<lo>:<hi>:step<s>``."""
        parts = [p.strip() for p in text.strip().split(":")]
        try:
            if parts[0] == "deterministic" and len(parts) == 2:
                return cls.deterministic(float(parts[1]))
            if parts[0] == "uniform" and len(parts) == 4 and parts[3].startswith("step"):
                lo, hi, step = float(parts[1]), float(parts[2]), float(parts[3][4:])
                if not step > 0 or hi < lo:
                    raise InvalidParameterError(f"bad uniform grid in {text!r}")
                count = int(round((hi - lo) / step)) + 1
                return cls.uniform([round(lo + k * step, 12) for k in range(count)])
        except ValueError:
            pass
        raise InvalidParameterError(
            f"cannot parse rho spec {text!r}; use deterministic:<v> or uniform:<lo>:<hi>:step<s>"
        )

    @property
    def is_random(self) -> bool:
        return self.kind == "uniform"

    def distribution(self) -> tuple[np.ndarray, np.ndarray]:
        vals = np.asarray(self.values, dtype=float)
        return vals, np.full(len(vals), 1.0 / len(vals))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind == "deterministic":
            return np.full(count, self.values[0])
        return np.asarray(self.values)[rng.integers(0, len(self.values), size=count)]

    def __str__(self):
        if self.kind == "deterministic":
            return f"deterministic:{self.values[0]!r}"
        return "uniform:" + ",".join(repr(v) for v in self.values)


def expected_gamma(mode: str, values: Sequence[float], probs: Sequence[float]) -> float:
    """E[gamma] when rho follows the discrete distribution (values, probs)."""
    probs = np.asarray(probs, dtype=float)
    if len(values) != len(probs) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("probabilities must be non-negative and sum to 1")
    return float(sum(p * aggregate(mode, v)[0] for v, p in zip(values, probs)))


def expected_phi(mode: str, values: Sequence[float], probs: Sequence[float]) -> float:
    """E[rho after aggregation] under the same distribution."""
    probs = np.asarray(probs, dtype=float)
    if len(values) != len(probs) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("probabilities must be non-negative and sum to 1")
    return float(sum(p * aggregate(mode, v)[1] for v, p in zip(values, probs)))


@dataclass(frozen=True)
class TrafficProfile:
    rhos: tuple[float, ...]
    mode: str = "none"
    gammas: tuple[int, ...] = field(init=False)
    rhos_new: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if len(self.rhos) == 0:
            raise InvalidParameterError("a traffic profile needs at least one STA")
        pairs = [aggregate(self.mode, float(r)) for r in self.rhos]
        object.__setattr__(self, "gammas", tuple(g for g, _ in pairs))
        object.__setattr__(self, "rhos_new", tuple(r for _, r in pairs))

    @property
    def phi(self) -> float:
        return fdf(self.rhos_new)

    @property
    def exp_gamma(self) -> float:
        return float(np.mean(self.gammas))

    @property
    def eta(self) -> float:
        return utilization(self.phi)
