import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibfd_dcf.aggregation import RhoSpec, TrafficProfile
from ibfd_dcf.errors import InvalidParameterError
from ibfd_dcf.hd import solve_hd
from ibfd_dcf.ibfd import solve_ibfd
from ibfd_dcf.sim import (
    Scenario,
    SimStats,
    mean_latency_us,
    mean_stderr,
    run,
    run_replications,
    run_seed,
    throughput_mbps,
)


def conserved(s):
    return s.elapsed_ns == s.idle_ns + s.busy_success_ns + s.busy_collision_ns


def test_two_node_ibfd_never_collides():
    s = run(Scenario(2, horizon=200_000))
    assert s.collisions == 0 and s.busy_collision_ns == 0
    assert s.failures.sum() == 0 and s.drops.sum() == 0
    # every exchange is bidirectional: one side contends, the other replies
    assert s.node_successes.sum() == 2 * s.successes
    assert s.attempts.sum() + s.replies.sum() == 2 * s.successes


@settings(max_examples=25)
@given(st.integers(1, 12), st.sampled_from(["hd", "ibfd"]), st.sampled_from(["none", "dual", "multi"]),
       st.integers(0, 2**32 - 1))
def test_time_is_conserved(n, duplex, agg, seed):
    if duplex == "hd":
        agg = "none"
    n = max(n, 2) if duplex == "ibfd" else n
    s = run(Scenario(n, duplex, agg, RhoSpec.uniform(), horizon=3000, seed=seed))
    assert conserved(s)
    assert s.events == 3000
    assert s.successes + s.collisions <= s.events


def test_same_seed_same_counters():
    sc = Scenario(6, aggregation="dual", rho=RhoSpec.uniform(), horizon=20_000)
    a, b = run(sc), run(sc)
    assert a.elapsed_ns == b.elapsed_ns and a.latency_sum_ns == b.latency_sum_ns
    assert np.array_equal(a.attempts, b.attempts) and a.rhos == b.rhos
    c = run(sc, seed=sc.seed + 1)
    assert c.elapsed_ns != a.elapsed_ns


def test_replication_seeds_are_distinct_per_point():
    keys = {tuple(run_seed(12345, n, i).generate_state(2)) for n in (2, 4) for i in range(3)}
    assert len(keys) == 6


def test_variants_share_ratio_draws():
    base = dict(n=7, rho=RhoSpec.uniform(), horizon=100)
    for i in range(3):
        seed = run_seed(1, 7, i)
        rhos = {run(Scenario(duplex=d, aggregation=a, **base), seed).rhos
                for d, a in (("hd", "none"), ("ibfd", "none"), ("ibfd", "multi"))}
        assert len(rhos) == 1


@pytest.mark.parametrize("mode,gamma", [("none", 1), ("dual", 2), ("multi", 3)])
def test_each_exchange_carries_one_dl_and_gamma_ul(mode, gamma):
    s = run(Scenario(5, aggregation=mode, horizon=50_000))
    assert s.dl_frames == s.successes
    assert s.ul_frames == gamma * s.successes
    assert s.latency_count == s.dl_frames + s.ul_frames
    rho_bits = int(round(gamma * 0.3 * 7991)) * 8
    assert s.ul_bits == s.successes * rho_bits
    assert s.dl_bits == s.successes * 7991 * 8


def test_hd_counts_one_frame_per_success():
    s = run(Scenario(5, duplex="hd", horizon=50_000))
    assert s.dl_frames + s.ul_frames == s.successes == s.latency_count
    assert s.node_successes.sum() == s.successes
    # back-to-back frames are successes but not contention attempts
    assert s.attempts.sum() == s.node_successes.sum() - s.consecutive.sum() + s.failures.sum()


def test_hd_collision_frequency_matches_model():
    sc = Scenario(10, duplex="hd", horizon=1_000_000)
    s = run(sc)
    sol = solve_hd(10, sc.backoff)
    freq = s.failures.sum() / s.attempts.sum()
    assert freq == pytest.approx(sol.p, rel=0.01)


@pytest.mark.parametrize("n", [4, 10, 20])
def test_ibfd_empirical_tau_matches_model(n):
    sc = Scenario(n, horizon=400_000)
    s = run(sc)
    sol = solve_ibfd(n, sc.backoff)
    tau = s.empirical_tau()
    assert tau[0] == pytest.approx(sol.tau_ap, rel=0.02)
    assert tau[1:].mean() == pytest.approx(sol.tau_sta, rel=0.02)


def test_two_node_tau_is_renewal_value():
    # both nodes redraw from {0..15} after every exchange: each event is a
    # fresh minimum of two counters, so the per-node contention rate is 1/11
    s = run(Scenario(2, horizon=400_000))
    assert s.empirical_tau().sum() / 2 == pytest.approx(1 / 11, rel=0.01)


def test_aggregation_latency_ratios():
    sc = dict(n=2, horizon=300_000)
    base = mean_latency_us(run(Scenario(**sc)))
    assert mean_latency_us(run(Scenario(aggregation="dual", **sc))) == pytest.approx(base * 2 / 3, rel=0.02)
    assert mean_latency_us(run(Scenario(aggregation="multi", **sc))) == pytest.approx(base / 2, rel=0.02)


def test_fixed_traffic_is_used():
    tp = TrafficProfile((0.1, 0.9), "multi")
    s = run(Scenario(3, aggregation="multi", horizon=5000), traffic=tp)
    assert s.rhos == (0.1, 0.9) and s.gammas == (10, 1)
    with pytest.raises(InvalidParameterError):
        run(Scenario(4, horizon=10), traffic=tp)


def test_single_hd_node():
    s = run(Scenario(1, duplex="hd", horizon=10_000))
    assert s.collisions == 0 and s.dl_frames == s.successes > 0
    assert conserved(s)


def _empty_stats(**kw):
    z = np.zeros(2, np.int64)
    fields = dict(elapsed_ns=0, idle_ns=0, busy_success_ns=0, busy_collision_ns=0, events=0, collisions=0,
                  successes=0, dl_frames=0, ul_frames=0, dl_bits=0, ul_bits=0, latency_sum_ns=0,
                  latency_count=0, attempts=z, node_successes=z, failures=z, drops=z, replies=z,
                  consecutive=z)
    fields.update(kw)
    return SimStats(**fields)


def test_metrics_on_degenerate_runs():
    with pytest.raises(InvalidParameterError):
        throughput_mbps(_empty_stats())
    idle = _empty_stats(elapsed_ns=9000, idle_ns=9000, events=1)
    assert throughput_mbps(idle) == 0.0
    with pytest.raises(InvalidParameterError):
        mean_latency_us(idle)
    assert idle.idle_us == 9.0


@pytest.mark.parametrize("kwargs", [
    dict(n=1),
    dict(n=4, duplex="fd"),
    dict(n=4, duplex="hd", aggregation="dual"),
    dict(n=4, aggregation="triple"),
    dict(n=4, horizon=0),
    dict(n=4, runs=0),
    dict(n=4, drop_latency="keep"),
    dict(n=0, duplex="hd"),
])
def test_invalid_scenarios(kwargs):
    with pytest.raises(InvalidParameterError):
        Scenario(**kwargs)


def test_replications_and_summary():
    reps = run_replications(Scenario(4, horizon=5000, runs=3))
    assert len(reps.runs) == 3
    mean, se = reps.throughput()
    assert mean == pytest.approx(reps.throughputs.mean()) and se > 0
    assert mean_stderr([2.0]) == (2.0, 0.0)
    assert mean_stderr([1.0, 3.0]) == (2.0, 1.0)
    with pytest.raises(InvalidParameterError):
        mean_stderr([])
