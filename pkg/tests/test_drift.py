"""Drift closed forms against the exact event-space enumeration oracle."""

import warnings

import numpy as np
import pytest

from fdrelay import (
    BetaWarning,
    EnumerationLimitError,
    ModelError,
    NetworkParams,
    ParameterError,
    build_success_table,
    enumerate_drift,
    n_user_drift,
    two_user_drift,
)


def random_params(rng, n=None, symmetric=True):
    """Random but physically valid parameter draw."""
    if n is None:
        n = int(rng.integers(1, 9))
    kwargs = dict(
        n=n,
        q0=float(rng.uniform(0.0, 1.0)),
        r_d=float(rng.uniform(60.0, 250.0)),
        r_0=float(rng.uniform(20.0, 120.0)),
        r_0d=float(rng.uniform(30.0, 150.0)),
        alpha=float(rng.uniform(2.0, 5.0)),
        gamma_0=float(rng.uniform(0.05, 3.0)),
        gamma_d=float(rng.uniform(0.05, 3.0)),
        g=float(10.0 ** rng.uniform(-10.0, 0.0)),
        p_tx_user=float(10.0 ** rng.uniform(-4.0, -2.0)),
        p_tx_relay=float(10.0 ** rng.uniform(-3.0, -1.0)),
    )
    if symmetric:
        kwargs["q"] = float(rng.uniform(0.0, 1.0))
    else:
        kwargs["n"] = 2
        kwargs["q"] = (float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BetaWarning)
        return NetworkParams(**kwargs)


def test_silent_users_two_user():
    p = NetworkParams(n=2, q=(0.0, 0.0), q0=0.7)
    t = build_success_table(p)
    d = two_user_drift(t, p)
    assert d.lambda0 == 0.0 and d.lambda1 == 0.0
    assert np.all(d.r0[1:] == 0.0) and np.all(d.r1[1:] == 0.0)
    assert d.p_minus1 == pytest.approx(0.7 * t.p_0d[0], abs=1e-15)


def test_silent_relay_makes_states_identical():
    p = NetworkParams(n=2, q=(0.4, 0.8), q0=0.0)
    t = build_success_table(p)
    d = two_user_drift(t, p)
    assert d.p_minus1 == 0.0
    # the printed r^0 and r^1 sums order their terms differently, so the
    # identity holds mathematically, not bitwise
    assert np.allclose(d.r0, d.r1, rtol=0.0, atol=1e-15)
    p_sym = p.updated(q=0.3)
    dn = n_user_drift(build_success_table(p_sym), p_sym)
    assert dn.p_minus1 == 0.0
    assert np.array_equal(dn.r0, dn.r1)


def test_two_user_closed_form_matches_enumeration():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(30):
        p = random_params(rng, symmetric=False)
        d_cf = two_user_drift(build_success_table(p), p)
        d_en = enumerate_drift(p)
        d_cf.validate()
        d_en.validate()
        worst = max(worst, d_cf.max_abs_diff(d_en))
    assert worst <= 1e-12


def test_n_user_closed_form_matches_enumeration():
    rng = np.random.default_rng(202)
    worst = 0.0
    for n in range(1, 9):
        for _ in range(4):
            p = random_params(rng, n=n)
            d_cf = n_user_drift(build_success_table(p), p)
            d_en = enumerate_drift(p)
            worst = max(worst, d_cf.max_abs_diff(d_en))
    assert worst <= 1e-12


def test_two_pipelines_agree_at_n2_symmetric():
    rng = np.random.default_rng(303)
    for _ in range(20):
        p = random_params(rng, n=2)
        t = build_success_table(p)
        assert n_user_drift(t, p).max_abs_diff(two_user_drift(t, p)) <= 1e-12


def test_completeness_of_laws():
    rng = np.random.default_rng(404)
    for _ in range(20):
        p = random_params(rng)
        d = n_user_drift(build_success_table(p), p)
        assert abs(d.r0.sum() - 1.0) <= 1e-12
        assert abs(d.r1.sum() - 1.0) <= 1e-12
        assert abs(d.p_minus1 + d.p1.sum() - 1.0) <= 1e-12
        assert np.array_equal(d.p0, d.r0)


def test_busy_arrivals_monotone_in_self_interference():
    # lambda1(g=0) >= lambda1(g=1): g only degrades reception at the relay
    base = dict(n=8, q=0.15, q0=0.8, gamma_0=0.4, gamma_d=0.4)
    lam = []
    for g in (0.0, 1e-6, 1e-2, 1.0):
        p = NetworkParams(g=g, **base)
        lam.append(n_user_drift(build_success_table(p), p).lambda1)
    assert all(a >= b - 1e-15 for a, b in zip(lam, lam[1:]))


def test_relay_interference_at_destination_can_raise_busy_arrivals():
    # Counterexample to "lambda1 <= lambda0 when g > 0": with a low threshold
    # the transmitting relay blocks the destination, so more user packets
    # miss it and land in the relay queue; busy slots then see MORE arrivals.
    p = NetworkParams(n=10, q=0.1, q0=0.95, gamma_0=0.2, gamma_d=0.2, g=1e-10)
    d = n_user_drift(build_success_table(p), p)
    assert d.lambda1 > d.lambda0


def test_enumeration_guards():
    with pytest.raises(EnumerationLimitError):
        enumerate_drift(NetworkParams(n=13))
    with pytest.raises(ParameterError):
        enumerate_drift(NetworkParams(), queue_state="busy")
    with pytest.raises(ModelError):
        two_user_drift(build_success_table(NetworkParams(n=3)), NetworkParams(n=3))


def test_enumeration_single_forced_transmitter():
    p = NetworkParams(n=1, q=1.0, q0=0.0, gamma_0=0.6, gamma_d=0.6)
    t = build_success_table(p)
    d = enumerate_drift(p, queue_state="empty")
    assert d.r0[1] == pytest.approx((1.0 - t.p_d[1, 0]) * t.p_0[1, 0], abs=1e-15)


def test_enumeration_single_state_variants():
    p = NetworkParams(n=3, q=0.3, q0=0.6)
    d_empty = enumerate_drift(p, queue_state="empty")
    d_busy = enumerate_drift(p, queue_state="nonempty")
    d_both = enumerate_drift(p)
    assert np.array_equal(d_both.r0, d_empty.r0)
    assert np.array_equal(d_both.r1, d_busy.r1)
    assert d_both.p_minus1 == d_busy.p_minus1
    assert d_empty.p_minus1 == 0.0
