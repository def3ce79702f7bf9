"""Saturation throughput and latency of half- and full-duplex 802.11 DCF WLANs.

Analytical models (``hd``, ``ibfd``), frame aggregation rules (``aggregation``),
a Monte-Carlo simulator (``sim``) and the experiment harness (``experiments``, ``cli``).
"""

from .errors import ConvergenceError, InvalidParameterError, ModelInconsistencyError
from .params import BackoffParams, PhyMacParams

__all__ = [
    "BackoffParams",
    "ConvergenceError",
    "InvalidParameterError",
    "ModelInconsistencyError",
    "PhyMacParams",
]
__version__ = "0.1.0"
