"""Slot-synchronous Monte-Carlo simulator of HD and full-duplex DCF."""

from .core import (
    DUPLEX,
    Replications,
    Scenario,
    SimStats,
    mean_latency_us,
    mean_stderr,
    run,
    run_replications,
    run_seed,
    sample_traffic,
    throughput_mbps,
)

__all__ = [
    "DUPLEX",
    "Replications",
    "Scenario",
    "SimStats",
    "mean_latency_us",
    "mean_stderr",
    "run",
    "run_replications",
    "run_seed",
    "sample_traffic",
    "throughput_mbps",
]
