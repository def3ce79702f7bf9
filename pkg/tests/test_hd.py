import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ibfd_dcf.errors import ConvergenceError, InvalidParameterError, ModelInconsistencyError
from ibfd_dcf.hd import (
    UNIFORM,
    ap_collision_fraction,
    expected_max_collision_load,
    hd_expected_collision_bytes,
    hd_expected_payload_bytes,
    hd_latency_us,
    hd_metrics,
    hd_success_probability,
    hd_transmission_probability,
    solve_hd,
    solve_hd_bisection,
    tau_hd,
)
from ibfd_dcf.params import BackoffParams

MPDU = 7991


def brute_force_max_load(tau, loads):
    """E[max load | >= 2 transmitters] by walking all 2^n transmit vectors."""
    num = den = 0.0
    for v in itertools.product((0, 1), repeat=len(loads)):
        if sum(v) < 2:
            continue
        pr = np.prod([tau if x else 1 - tau for x in v])
        num += pr * max(l for l, x in zip(loads, v) if x)
        den += pr
    return num / den


def test_single_node_tau_is_one_eighth():
    b = BackoffParams(w0=16, m=6, r=6)
    sol = solve_hd(1, b)
    assert sol.p == 0.0
    assert sol.tau == pytest.approx(1 / 8, abs=1e-12)


def test_tau_at_zero_p_matches_reduced_form(backoff):
    assert tau_hd(0.0, backoff) == pytest.approx(1 / (1 + 15 / 2 - 1 / 2))


@pytest.mark.parametrize("n", [2, 5, 10, 20])
def test_iteration_agrees_with_bisection(backoff, n):
    a = solve_hd(n, backoff)
    b = solve_hd_bisection(n, backoff)
    assert abs(a.tau - b.tau) < 1e-9
    assert a.p == pytest.approx(1 - (1 - a.tau) ** (n - 1), abs=1e-15)


def test_solution_satisfies_both_equations(backoff):
    sol = solve_hd(10, backoff)
    assert abs(tau_hd(sol.p, backoff) - sol.tau) < 1e-9


def test_tau_strictly_decreasing_in_n(backoff):
    taus = [solve_hd(n, backoff).tau for n in range(1, 21)]
    assert all(a > b for a, b in zip(taus, taus[1:]))


def test_non_convergence_reports_residual(backoff):
    with pytest.raises(ConvergenceError) as info:
        solve_hd(10, backoff, max_iter=2)
    assert info.value.residual > 0


def test_success_probability_examples():
    assert hd_success_probability(0.3, 1) == 1.0
    assert hd_success_probability(1e-9, 10) == pytest.approx(1.0, abs=1e-7)
    # 10 * 0.1 * 0.9**9 / (1 - 0.9**10)
    assert hd_success_probability(0.1, 10) == pytest.approx(0.5948221475418107, rel=1e-12)
    with pytest.raises(ModelInconsistencyError):
        hd_success_probability(0.0, 5)


def test_expected_payload_examples():
    assert hd_expected_payload_bytes(2, 0.5, MPDU) == pytest.approx(0.75 * MPDU)
    assert hd_expected_payload_bytes(10, 0.5, MPDU) == pytest.approx(0.55 * MPDU)
    assert hd_expected_payload_bytes(10, 0.3, MPDU) == pytest.approx(0.37 * MPDU)
    for n in (1, 3, 11):
        assert hd_expected_payload_bytes(n, 0.5, MPDU) == pytest.approx((n + 1) / (2 * n) * MPDU)


def test_uniform_collision_size_formula():
    tau, n = 0.1, 10
    q = tau * (1 - 0.9**9) / (1 - 0.9**10 - n * tau * 0.9**9)
    assert ap_collision_fraction(tau, n) == pytest.approx(q, rel=1e-12)
    assert hd_expected_collision_bytes(tau, n, UNIFORM, MPDU) == pytest.approx((0.3519 * q + 0.6481) * MPDU)


def test_full_load_collision_is_mpdu():
    assert hd_expected_collision_bytes(0.1, 6, 1.0, MPDU) == pytest.approx(MPDU, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 6, 10])
def test_deterministic_collision_matches_brute_force(n):
    tau = 0.07
    got = hd_expected_collision_bytes(tau, n, 0.3, MPDU) / MPDU
    assert got == pytest.approx(brute_force_max_load(tau, [1.0] + [0.3] * (n - 1)), rel=1e-12)
    # homogeneous STAs: max is the AP's frame iff the AP collides
    q = ap_collision_fraction(tau, n)
    assert got == pytest.approx(0.3 + 0.7 * q, rel=1e-12)


@given(st.floats(0.01, 0.6), st.lists(st.sampled_from([k / 10 for k in range(1, 10)]), min_size=1, max_size=6))
def test_enumeration_property(tau, rhos):
    loads = [1.0] + rhos
    assert expected_max_collision_load(tau, loads) == pytest.approx(brute_force_max_load(tau, loads), rel=1e-10)


def test_uniform_constants_close_to_exact_enumeration():
    # averaging the exact enumeration over random STA ratios lands near the
    # two-collider approximation when collisions are mostly pairwise
    rng = np.random.default_rng(0)
    tau, n = 0.02, 5
    grid = np.arange(1, 10) / 10
    exact = np.mean([expected_max_collision_load(tau, [1.0] + list(rng.choice(grid, n - 1)))
                     for _ in range(4000)])
    approx = hd_expected_collision_bytes(tau, n, UNIFORM, 1.0)
    assert exact == pytest.approx(approx, rel=0.01)


def test_collision_size_errors():
    with pytest.raises(InvalidParameterError):
        hd_expected_collision_bytes(0.1, 1, UNIFORM, MPDU)
    with pytest.raises(InvalidParameterError):
        hd_expected_collision_bytes(0.0, 4, UNIFORM, MPDU)
    with pytest.raises(InvalidParameterError):
        hd_expected_collision_bytes(0.1, 4, [0.3, 0.3], MPDU)


def test_throughput_trends(phy, backoff):
    s2 = hd_metrics(phy, solve_hd(2, backoff), 0.3).throughput_mbps
    s20 = hd_metrics(phy, solve_hd(20, backoff), 0.3).throughput_mbps
    assert s20 < s2


def test_throughput_vanishes_with_tau(phy, backoff):
    from ibfd_dcf.hd import HdSolution, hd_throughput_from_parts
    tiny = HdSolution(tau=1e-9, p=1 - (1 - 1e-9) ** 9, n=10, backoff=backoff)
    s, _, _ = hd_throughput_from_parts(phy, tiny, 0.55 * MPDU, 0.7 * MPDU)
    assert s < 1e-4


def test_metric_invariants(phy, backoff):
    for n in (1, 2, 7, 20):
        m = hd_metrics(phy, solve_hd(n, backoff), 0.5 if n > 1 else [])
        assert 0 <= m.p_s <= 1 and 0 <= m.p_tr <= 1
        assert m.p_tr >= m.p_s * m.p_tr
        assert m.throughput_mbps > 0 and m.latency_us > 0


def test_latency_formula():
    assert hd_latency_us(4, 100.0, 1000) == pytest.approx(4 * 8000 / 100.0)
    assert hd_latency_us(4, 200.0, 1000) == pytest.approx(hd_latency_us(4, 100.0, 1000) / 2)
    with pytest.raises(ModelInconsistencyError):
        hd_latency_us(4, 0.0, 1000)


def test_transmission_probability():
    assert hd_transmission_probability(0.1, 3) == pytest.approx(1 - 0.729)
