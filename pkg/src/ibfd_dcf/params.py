"""IEEE 802.11ac PHY/MAC constants and channel-occupancy durations.

All public durations are microseconds (floats). The simulator works in
integer nanoseconds; use :func:`to_ns` to convert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import InvalidParameterError

# Retry limit for the HD model: dot11LongRetryLimit, which applies to frames
# longer than the RTS threshold (every MPDU here is).
DEFAULT_RETRY_LIMIT = 4


@dataclass(frozen=True)
class PhyMacParams:
    phy_header_us: float = 44.0
    mac_header_bytes: int = 36
    fcs_bytes: int = 4
    ack_bytes: int = 14
    mpdu_max_bytes: int = 7991
    data_rate_mbps: float = 234.0
    basic_rate_mbps: float = 24.0
    slot_us: float = 9.0
    sifs_us: float = 16.0
    difs_us: float = 34.0
    cw_min: int = 16
    cw_max: int = 1024

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise InvalidParameterError(f"{f.name} must be positive, got {value!r}")
        if self.mpdu_max_bytes <= self.mac_header_bytes + self.fcs_bytes:
            raise InvalidParameterError("mpdu_max_bytes must exceed MAC header + FCS")
        ratio = self.cw_max / self.cw_min
        if ratio < 1 or not float(ratio).is_integer() or int(ratio) & (int(ratio) - 1):
            raise InvalidParameterError("cw_max must equal cw_min * 2**m for an integer m >= 0")

    @property
    def max_stage(self) -> int:
        """m such that cw_max = cw_min * 2**m."""
        return int(math.log2(self.cw_max // self.cw_min))

    @classmethod
    def from_mapping(cls, mapping) -> "PhyMacParams":
        """Build from a config section; unknown keys are rejected, missing keys keep defaults."""
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise InvalidParameterError(f"unknown [phy_mac] key {key!r}")
            kind = int if known[key] in ("int", int) else float
            try:
                kwargs[key] = kind(raw)
            except ValueError as exc:
                raise InvalidParameterError(f"[phy_mac] {key}: {exc}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class BackoffParams:
    """Contention-window ladder.

    ``m`` is the last backoff stage of the IBFD chain (a frame failing there is
    dropped); ``r`` is the HD retry limit, so HD uses stages ``0..r``.
    """

    w0: int = 16
    m: int = 6
    r: int = DEFAULT_RETRY_LIMIT
    cw_max: int = 1024

    def __post_init__(self):
        if self.w0 < 1:
            raise InvalidParameterError("w0 must be >= 1")
        if self.m < 0 or self.r < 0:
            raise InvalidParameterError("m and r must be >= 0")
        if self.cw_max < self.w0:
            raise InvalidParameterError("cw_max must be >= w0")

    @classmethod
    def from_phy(cls, params: PhyMacParams, r: int = DEFAULT_RETRY_LIMIT) -> "BackoffParams":
        return cls(w0=params.cw_min, m=params.max_stage, r=r, cw_max=params.cw_max)

    def _ladder(self, last_stage):
        return tuple(min(self.w0 * 2**i, self.cw_max) for i in range(last_stage + 1))

    @property
    def windows(self) -> tuple[int, ...]:
        """W_0..W_m."""
        return self._ladder(self.m)

    @property
    def hd_windows(self) -> tuple[int, ...]:
        """W_0..W_r, the ladder walked by the HD model."""
        return self._ladder(self.r)


def duration_us(nbytes: float, rate_mbps: float) -> float:
    """Air time of ``nbytes`` at ``rate_mbps`` (1 Mbit/s carries 1 bit per µs)."""
    if not rate_mbps > 0:
        raise InvalidParameterError(f"rate must be positive, got {rate_mbps!r}")
    if nbytes < 0:
        raise InvalidParameterError(f"byte count must be >= 0, got {nbytes!r}")
    return 8.0 * nbytes / rate_mbps


def ack_us(params: PhyMacParams) -> float:
    return params.phy_header_us + duration_us(params.ack_bytes, params.basic_rate_mbps)


def header_us(params: PhyMacParams) -> float:
    """PHY preamble plus MAC header and FCS at the data rate."""
    return params.phy_header_us + duration_us(
        params.mac_header_bytes + params.fcs_bytes, params.data_rate_mbps
    )


def _exchange_us(params, nbytes):
    if not 0 < nbytes <= params.mpdu_max_bytes:
        raise InvalidParameterError(
            f"frame payload must lie in (0, {params.mpdu_max_bytes}], got {nbytes!r}"
        )
    return (
        header_us(params)
        + duration_us(nbytes, params.data_rate_mbps)
        + params.sifs_us
        + ack_us(params)
        + params.difs_us
    )


def t_success_us(params: PhyMacParams, payload_bytes: float) -> float:
    """Channel time of a successful exchange carrying ``payload_bytes``."""
    return _exchange_us(params, payload_bytes)


def t_collision_us(params: PhyMacParams, collision_bytes: float) -> float:
    """Channel time lost to a collision whose longest frame carries ``collision_bytes``."""
    return _exchange_us(params, collision_bytes)


def to_ns(us: float) -> int:
    return int(round(us * 1000.0))
