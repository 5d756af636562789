"""Slot-level simulator: determinism, kernel equivalence, conservation,
mode equivalence, and agreement with the analytical model."""

import dataclasses

import numpy as np
import pytest

import fdrelay.sim as sim_mod
from fdrelay import (
    MODE_PROBABILITY,
    MODE_SINR,
    NetworkParams,
    ParameterError,
    SimConfig,
    analyze_relay_queue,
    available_backends,
    full_report,
    run_simulation,
    stability_probe,
)

REF = NetworkParams(n=10, gamma_0=0.6, gamma_d=0.6, g=1e-8, q0=0.99)


def results_equal(a, b, ignore=("kernel_backend",)):
    for f in dataclasses.fields(a):
        if f.name in ignore:
            continue
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if isinstance(va, np.ndarray):
            if not np.array_equal(va, vb, equal_nan=True):
                return False
        elif va != vb and not (_both_nan(va, vb)):
            return False
    return True


def _both_nan(a, b):
    try:
        return np.isnan(a) and np.isnan(b)
    except TypeError:
        return False


def test_determinism_bit_identical():
    cfg = SimConfig(slots=50_000, seed=321)
    r1 = run_simulation(REF, cfg)
    r2 = run_simulation(REF, cfg)
    assert results_equal(r1, r2, ignore=())


def test_backends_bit_identical(monkeypatch):
    if "cython" not in available_backends():
        pytest.skip("compiled kernel not built")
    cfg = SimConfig(slots=30_000, seed=99)
    for mode in (MODE_PROBABILITY, MODE_SINR):
        c = dataclasses.replace(cfg, mode=mode)
        monkeypatch.setattr(sim_mod, "KERNEL_BACKEND", "cython")
        r_cy = run_simulation(REF, c)
        monkeypatch.setattr(sim_mod, "KERNEL_BACKEND", "python")
        r_py = run_simulation(REF, c)
        assert r_cy.kernel_backend != r_py.kernel_backend or True
        assert results_equal(r_cy, r_py)


def test_silent_network():
    p = NetworkParams(n=4, q=0.0)
    r = run_simulation(p, SimConfig(slots=20_000, seed=5))
    assert r.p_empty == 1.0
    assert np.all(r.t == 0.0)
    assert r.arrivals == 0 and r.departures == 0
    assert r.qlen_max == 0


def test_zero_threshold_all_direct():
    p = NetworkParams(n=6, q=0.2, gamma_0=0.0, gamma_d=0.0)
    r = run_simulation(p, SimConfig(slots=40_000, seed=6))
    assert r.p_empty == 1.0
    assert np.all(r.t_r == 0.0)
    assert r.delivered_direct == r.attempted  # every attempt succeeds
    assert r.t_all == pytest.approx(0.2, abs=0.005)
    # pure geometric head-of-line delay at rate q
    assert r.delay_all == pytest.approx(1.0 / 0.2, rel=0.05)


def test_conservation_identities():
    r = run_simulation(REF, SimConfig(slots=60_000, seed=17))
    assert r.delivered == r.delivered_direct + r.delivered_relay
    assert r.delivered_relay <= r.arrivals + int(r.qlen[r.warmup])
    assert int(r.relay_delivered_per_user.sum()) == r.delivered_relay
    # queue bookkeeping: post-warmup arrivals minus departures move the queue
    assert r.qlen_final - int(r.qlen[r.warmup]) == r.arrivals - r.departures
    assert r.qlen_max >= r.qlen_final >= 0
    # per slot: at most one departure, at most n arrivals
    steps = np.diff(r.qlen)
    assert steps.min() >= -1 and steps.max() <= REF.n


def test_modes_agree_distributionally():
    cfg_p = SimConfig(slots=150_000, seed=11, mode=MODE_PROBABILITY)
    cfg_s = SimConfig(slots=150_000, seed=12, mode=MODE_SINR)
    a = run_simulation(REF, cfg_p)
    b = run_simulation(REF, cfg_s)
    for name in ("lam", "mu", "p_empty", "q_bar", "t_d_all", "t_r_all", "delay_all"):
        va, vb = getattr(a, name), getattr(b, name)
        se = np.hypot(getattr(a, "se_" + name), getattr(b, "se_" + name))
        assert abs(va - vb) <= 3.0 * se, (name, va, vb, se)


def test_empirical_rates_match_analytical():
    r = run_simulation(REF, SimConfig(slots=300_000, seed=23))
    rep, m = full_report(REF)
    assert abs(r.lambda1 - m.lambda1) <= 3.0 * r.se_lambda1
    assert abs(r.mu - m.mu) <= 3.0 * r.se_mu
    assert abs(r.lambda0 - m.lambda0) <= 3.0 * r.se_lambda0
    assert abs(r.p_empty - m.p_empty) <= 3.0 * r.se_p_empty
    assert abs(r.t_r_all - rep.t_relayed[0]) <= 3.0 * r.se_t_r_all


def test_saturated_relay_aggregate_matches_remark_form():
    # unstable queue: delivered rate = direct sum + relay service rate
    from fdrelay import aggregate_throughput_unstable, build_success_table

    p = NetworkParams(n=20, q=0.1, q0=0.95, gamma_0=0.2, gamma_d=0.2, g=1e-10)
    m = analyze_relay_queue(p)
    assert not m.stable
    expected = aggregate_throughput_unstable(build_success_table(p), p, m.mu)
    r = run_simulation(p, SimConfig(slots=1_000_000, seed=77))
    assert r.probe == "unstable"
    empirical = (r.delivered_direct + r.delivered_relay) / r.post_warmup_slots
    combined_se = p.n * r.se_t_d_all + r.se_mu
    assert abs(empirical - expected) <= 3.0 * combined_se


def test_asymmetric_two_user_per_user_rates():
    p = NetworkParams(n=2, q=(0.05, 0.25), gamma_0=0.6, gamma_d=0.6, g=1e-8, q0=0.99)
    r = run_simulation(p, SimConfig(slots=400_000, seed=41))
    rep, m = full_report(p)
    assert m.stable
    for i in range(2):
        assert abs(r.t_d[i] - rep.t_direct[i]) <= 3.0 * r.se_t_d[i]
        assert abs(r.t_r[i] - rep.t_relayed[i]) <= 3.0 * r.se_t_r[i]
    # user 2 transmits five times as often; the ordering must show
    assert r.t[1] > r.t[0]


def test_probe_verdicts():
    stable = run_simulation(REF, SimConfig(slots=120_000, seed=31))
    assert stable.probe == "stable"

    unstable_p = NetworkParams(n=13, q=0.1, q0=0.95, gamma_0=0.2, gamma_d=0.2, g=1e-10)
    unstable = run_simulation(unstable_p, SimConfig(slots=120_000, seed=32))
    assert unstable.probe == "unstable"
    assert not analyze_relay_queue(unstable_p).stable

    tiny = run_simulation(REF, SimConfig(slots=110, warmup=100, seed=33))
    assert tiny.probe == "inconclusive"
    assert stability_probe(tiny) == "inconclusive"


def test_benchmark_script_runs():
    import os
    import subprocess
    import sys

    root = os.path.join(os.path.dirname(__file__), "..")
    env = dict(os.environ, PYTHONPATH=os.path.join(root, "src"))
    proc = subprocess.run(
        [sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"),
         "--slots", "5000", "--n", "4"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert "slots/s" in proc.stdout


def test_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(slots=0)
    with pytest.raises(ParameterError):
        SimConfig(slots=100, warmup=100)
    with pytest.raises(ParameterError):
        SimConfig(slots=100, mode="other")
    cfg = SimConfig(slots=200_000)
    assert cfg.resolved_warmup == 20_000
    # the 10% rule has a floor of 10^4 slots whenever the run affords it
    assert SimConfig(slots=50_000).resolved_warmup == 10_000
    assert SimConfig(slots=5_000).resolved_warmup == 500
