"""INI configuration: [phy_mac], [backoff], [scenario], [experiment].

Example::

    [phy_mac]
    mpdu_max_bytes = 7991

    [backoff]
    r = 4

    [scenario]
    n = 10
    duplex = ibfd
    aggregation = multi
    rho = uniform:0.1:0.9:step0.1
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidParameterError
from .params import DEFAULT_RETRY_LIMIT, BackoffParams, PhyMacParams

ENV_VAR = "IBFD_DCF_CONFIG"
SECTIONS = ("phy_mac", "backoff", "scenario", "experiment")
BACKOFF_KEYS = ("w0", "m", "r", "cw_max")
SCENARIO_KEYS = ("n", "duplex", "aggregation", "rho", "horizon", "runs", "seed", "drop_latency")
EXPERIMENT_KEYS = ("name", "sweep", "variants", "metrics", "runs", "seed", "horizon", "plot_stderr")


@dataclass
class Config:
    phy: PhyMacParams = field(default_factory=PhyMacParams)
    backoff: BackoffParams = field(default_factory=BackoffParams)
    scenario: dict[str, str] = field(default_factory=dict)
    experiment: dict[str, str] = field(default_factory=dict)
    path: Path | None = None


def _int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise InvalidParameterError(f"[{section}] {key} must be an integer, got {raw!r}") from None


def parse_config(text: str, path: Path | None = None) -> Config:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise InvalidParameterError(f"malformed config: {exc}") from None
    for name in parser.sections():
        if name not in SECTIONS:
            raise InvalidParameterError(f"unknown config section [{name}]")
    phy = PhyMacParams.from_mapping(dict(parser["phy_mac"])) if parser.has_section("phy_mac") else PhyMacParams()

    raw_backoff = dict(parser["backoff"]) if parser.has_section("backoff") else {}
    for key in raw_backoff:
        if key not in BACKOFF_KEYS:
            raise InvalidParameterError(f"unknown [backoff] key {key!r}")
    defaults = BackoffParams.from_phy(phy, DEFAULT_RETRY_LIMIT)
    backoff = BackoffParams(**{
        key: _int("backoff", key, raw_backoff[key]) if key in raw_backoff else getattr(defaults, key)
        for key in BACKOFF_KEYS
    })

    def section(name, allowed):
        values = dict(parser[name]) if parser.has_section(name) else {}
        for key in values:
            if key not in allowed:
                raise InvalidParameterError(f"unknown [{name}] key {key!r}")
        return values

    return Config(phy, backoff, section("scenario", SCENARIO_KEYS),
                  section("experiment", EXPERIMENT_KEYS), path)


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Read ``path``, else the file named by $IBFD_DCF_CONFIG, else built-in defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return Config()
    path = Path(path)
    text = path.read_text()  # OSError propagates (I/O failure)
    return parse_config(text, path)


def parse_sweep(text: str) -> tuple[int, ...]:
    """``2:20:2`` (inclusive range) or ``2,4,8``."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (int(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise InvalidParameterError(f"bad sweep range {text!r}")
            values = tuple(range(lo, hi + 1, step))
        else:
            values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InvalidParameterError(f"bad sweep {text!r}") from None
    if not values:
        raise InvalidParameterError("sweep is empty")
    return values
