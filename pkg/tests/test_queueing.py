"""Queue closed forms against the truncated-chain oracle."""

import numpy as np
import pytest

from fdrelay import (
    DriftDistribution,
    NetworkParams,
    TruncationError,
    UnstableQueueError,
    analyze_relay_queue,
    build_success_table,
    dtmc_steady_state,
    empty_probability,
    mean_arrival_rate,
    mean_queue_length,
    n_user_drift,
    q0_min,
    service_rate,
)
from fdrelay.drift import n_user_stability_terms
from fdrelay.queueing import _solve_truncated, _solve_truncated_sparse


def alternating_chain():
    # arrival in every empty slot, departure in every busy slot
    return DriftDistribution(
        n=1,
        r0=np.array([0.0, 1.0]),
        r1=np.array([1.0, 0.0]),
        p1=np.array([0.0, 0.0]),
        p_minus1=1.0,
    )


def test_alternating_chain_closed_forms_and_dtmc():
    d = alternating_chain()
    assert empty_probability(d) == pytest.approx(0.5, abs=1e-15)
    assert mean_queue_length(d) == pytest.approx(0.5, abs=1e-15)
    sol = dtmc_steady_state(d)
    assert sol.p_empty == pytest.approx(0.5, abs=1e-12)
    assert sol.mean == pytest.approx(0.5, abs=1e-12)


def test_empty_probability_trivial_and_unstable():
    never = DriftDistribution(
        n=1,
        r0=np.array([1.0, 0.0]),
        r1=np.array([1.0, 0.0]),
        p1=np.array([0.3, 0.0]),
        p_minus1=0.7,
    )
    assert empty_probability(never) == 1.0
    assert mean_arrival_rate(never) == 0.0
    assert mean_queue_length(never) == 0.0

    # q0 = 0 with arrivals: no service, drift non-negative
    p = NetworkParams(n=3, q=0.4, q0=0.0)
    d = n_user_drift(build_success_table(p), p)
    with pytest.raises(UnstableQueueError) as err:
        mean_arrival_rate(d, q0_min=0.42)
    assert err.value.q0_min == 0.42
    assert err.value.drift_margin <= 0.0


def test_service_rate_trivial_cases():
    p = NetworkParams(n=4, q=0.3, q0=0.0)
    assert service_rate(build_success_table(p), p) == 0.0
    p = NetworkParams(n=4, q=0.0, q0=0.8)
    t = build_success_table(p)
    assert service_rate(t, p) == pytest.approx(0.8 * t.p_0d[0], rel=1e-12)


def test_arrival_rate_is_plain_mixture():
    # identical empty/busy arrival laws collapse the mixture to lambda0
    d = DriftDistribution(
        n=2,
        r0=np.array([0.5, 0.3, 0.2]),
        r1=np.array([0.5, 0.3, 0.2]),
        p1=np.array([0.2, 0.1, 0.05]),
        p_minus1=0.65,
    )
    assert mean_arrival_rate(d) == pytest.approx(d.lambda0, rel=1e-14)


def test_closed_forms_match_dtmc_reference_configs():
    for kwargs in (
        dict(n=2, gamma_0=0.6, gamma_d=0.6, g=1e-8, q0=0.99),
        dict(n=10, gamma_0=0.6, gamma_d=0.6, g=1e-8, q0=0.99),
        dict(n=10, gamma_0=2.5, gamma_d=2.5, g=1.0, q0=0.99),
        dict(n=7, gamma_0=1.2, gamma_d=1.2, g=1e-10, q0=0.9),
    ):
        m = analyze_relay_queue(NetworkParams(q=0.1, **kwargs))
        assert m.stable
        sol = dtmc_steady_state(m.drift)
        assert sol.tail_mass < 1e-12
        assert abs(sol.p_empty - m.p_empty) <= 1e-8
        assert abs(sol.mean - m.q_bar) <= 1e-8


def test_near_critical_agreement():
    p = NetworkParams(n=10, gamma_0=0.6, gamma_d=0.6, g=1e-8)
    t = build_success_table(p)
    a, a_k, b_k = n_user_stability_terms(t, p)
    k = np.arange(len(a_k))
    ka, kb = float(k @ a_k), float(k @ b_k)
    q0_crit = ka / (0.99 * a + ka - kb)  # lambda1 = 0.99 * mu
    m = analyze_relay_queue(p.updated(q0=float(q0_crit)))
    assert m.lambda1 / m.mu == pytest.approx(0.99, abs=1e-12)
    sol = dtmc_steady_state(m.drift)
    assert abs(sol.p_empty - m.p_empty) <= 1e-6
    assert abs(sol.mean - m.q_bar) <= 1e-6


def test_q0_min_trivial_cases():
    p = NetworkParams(n=4, q=0.0)
    assert q0_min(p, build_success_table(p)) == 0.0

    # g = 0 removes the self-interference factor at the relay receiver, but
    # A_k and B_k still differ through the destination-side relay
    # interference in (1 - P_d,i,j); only the relay-reception factors match.
    p = NetworkParams(n=4, q=0.3, g=0.0)
    t = build_success_table(p)
    assert np.array_equal(t.p_0[1:, 0], t.p_0[1:, 1])
    a, a_k, b_k = n_user_stability_terms(t, p)
    k = np.arange(len(a_k))
    assert float(k @ b_k) > float(k @ a_k)  # relay Tx boosts pickups at the relay
    assert q0_min(p, t) == pytest.approx(
        float(k @ a_k) / (a + float(k @ a_k) - float(k @ b_k)), rel=1e-12
    )


def test_q0_min_matches_bisection_root():
    p0 = NetworkParams(n=8, q=0.12, gamma_0=0.5, gamma_d=0.5, g=1e-6)
    t = build_success_table(p0)
    target = q0_min(p0, t)
    assert 0.0 < target < 1.0

    def margin(q0):
        p = p0.updated(q0=q0)
        d = n_user_drift(build_success_table(p), p)
        return service_rate(build_success_table(p), p) - d.lambda1

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    assert abs(0.5 * (lo + hi) - target) <= 1e-10


def test_stability_monotone_in_q0():
    p0 = NetworkParams(n=12, q=0.1, gamma_0=0.2, gamma_d=0.2, g=1e-8)
    verdicts = [
        analyze_relay_queue(p0.updated(q0=q0)).stable
        for q0 in np.linspace(0.05, 1.0, 12)
    ]
    # once stable, stays stable for larger q0
    first_true = verdicts.index(True)
    assert all(verdicts[first_true:])


def test_unstable_outcome_is_typed_not_raised():
    p = NetworkParams(n=13, q=0.1, q0=0.95, gamma_0=0.2, gamma_d=0.2, g=1e-10)
    m = analyze_relay_queue(p)
    assert not m.stable
    assert m.p_empty == 0.0
    assert np.isinf(m.q_bar)
    assert m.q0_min > 0.95
    assert m.drift_surplus > 0.0
    with pytest.raises(UnstableQueueError):
        dtmc_steady_state(m.drift)


def test_q_bar_nonnegative_on_stable_draws():
    rng = np.random.default_rng(77)
    checked = 0
    for _ in range(40):
        p = NetworkParams(
            n=int(rng.integers(1, 9)),
            q=float(rng.uniform(0.0, 0.5)),
            q0=float(rng.uniform(0.3, 1.0)),
            gamma_0=float(rng.uniform(0.1, 2.5)),
            gamma_d=float(rng.uniform(0.1, 2.5)),
            g=float(10.0 ** rng.uniform(-10, 0)),
        )
        m = analyze_relay_queue(p)
        if m.stable:
            checked += 1
            assert m.q_bar >= 0.0
            assert 0.0 < m.p_empty <= 1.0
    assert checked > 10


def test_truncation_error_when_tail_never_settles():
    # drift margin so small the queue mean is ~1e9: the cap must trip
    d = DriftDistribution(
        n=1,
        r0=np.array([0.5, 0.5]),
        r1=np.array([1.0 - 0.5, 0.5]),
        p1=np.array([1.0 - 0.5 - 0.5000000005, 0.5]),
        p_minus1=0.5000000005,
    )
    with pytest.raises(TruncationError):
        dtmc_steady_state(d, max_truncation=20_000)


def test_solvers_agree():
    p = NetworkParams(n=6, q=0.15, gamma_0=0.8, gamma_d=0.8, g=1e-8)
    d = analyze_relay_queue(p).drift
    pi_a = _solve_truncated(d, 400)
    pi_b = _solve_truncated_sparse(d, 400)
    assert np.max(np.abs(pi_a - pi_b)) <= 1e-11
