"""Slot-level Monte Carlo simulation of the relay-assisted network.

Two reception models share one kernel loop: ``probability-sampling`` draws
reception outcomes directly from the analytical success probabilities
conditioned on the transmit set, while ``sinr-sampling`` draws exponential
received powers per tested link and applies the SINR threshold (with the
residual self-interference power drawn so that its marginal effect matches
the analytical self-interference factor). Interference draws are fresh per
tested link, so per-link outcomes are independent given the transmit set in
both modes, matching the analytical model; the modes agree distributionally.

The hot loop runs in a compiled Cython kernel when available and falls back
to a pure-Python twin otherwise (force the fallback with FDRELAY_PURE_PY=1).
Both kernels consume the same PCG64 stream identically, so results are
bit-identical across backends for a fixed seed.
"""

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..params import NetworkParams
from ..phy import MODE_EQ1, build_success_table
from . import _kernel_py

try:
    from . import _kernel_cy
except ImportError:  # extension not built; pure-Python fallback only
    _kernel_cy = None

MODE_PROBABILITY = "probability-sampling"
MODE_SINR = "sinr-sampling"
_MODE_IDS = {MODE_PROBABILITY: 0, MODE_SINR: 1}

_FORCE_PY = os.environ.get("FDRELAY_PURE_PY", "") not in ("", "0")
KERNEL_BACKEND = "python" if (_FORCE_PY or _kernel_cy is None) else "cython"


def available_backends():
    return ("python",) if _kernel_cy is None else ("cython", "python")


def get_kernel(backend=None):
    """Kernel module for the requested backend (default: best available)."""
    if backend is None:
        backend = KERNEL_BACKEND
    if backend == "cython":
        if _kernel_cy is None:
            raise ImportError("compiled kernel not available; build the extension first")
        return _kernel_cy
    if backend == "python":
        return _kernel_py
    raise ParameterError("backend", f"unknown kernel backend {backend!r}")


@dataclass(frozen=True)
class SimConfig:
    """Simulation run configuration.

    ``warmup`` defaults to 10% of the slots, with a floor of 10^4 when the
    run is long enough to afford it. Standard errors come from ``n_batches``
    contiguous batch means over the post-warmup slots.
    """

    slots: int = 1_000_000
    warmup: int | None = None
    seed: int = 12345
    mode: str = MODE_PROBABILITY
    stability_probe: bool = True
    n_batches: int = 32

    def __post_init__(self):
        if self.slots <= 0:
            raise ParameterError("slots", "must be > 0")
        if self.warmup is not None and not 0 <= self.warmup < self.slots:
            raise ParameterError("warmup", "must satisfy 0 <= warmup < slots")
        if self.mode not in _MODE_IDS:
            raise ParameterError("mode", f"must be one of {sorted(_MODE_IDS)}")
        if self.n_batches < 2:
            raise ParameterError("n_batches", "need at least 2 batches")

    @property
    def resolved_warmup(self):
        if self.warmup is not None:
            return self.warmup
        w = max(self.slots // 10, 10_000)
        return w if w < self.slots else self.slots // 10


@dataclass(frozen=True)
class SimResult:
    """Empirical counterparts of the analytical quantities, with batch-means
    standard errors. Conditional rates (lambda0, lambda1, mu) are NaN when
    their conditioning event never occurred."""

    n: int
    mode: str
    kernel_backend: str
    seed: int
    slots: int
    warmup: int
    n_batches: int
    lambda0: float
    lambda1: float
    lam: float
    mu: float
    p_empty: float
    q_bar: float
    se_lambda0: float
    se_lambda1: float
    se_lam: float
    se_mu: float
    se_p_empty: float
    se_q_bar: float
    t_d: np.ndarray
    t_r: np.ndarray
    t: np.ndarray
    se_t_d: np.ndarray
    se_t_r: np.ndarray
    se_t: np.ndarray
    delay: np.ndarray
    se_delay: np.ndarray
    # across-user summaries: per-user means for rates, delivery-weighted for delay
    t_d_all: float
    t_r_all: float
    t_all: float
    se_t_d_all: float
    se_t_r_all: float
    se_t_all: float
    delay_all: float
    se_delay_all: float
    arrivals: int
    departures: int
    delivered_direct: int
    delivered_relay: int
    attempted: int
    relay_delivered_per_user: np.ndarray
    qlen: np.ndarray = field(repr=False)
    qlen_max: int
    qlen_final: int
    qlen_slope: float
    qlen_slope_se: float
    probe: str | None

    @property
    def delivered(self):
        return self.delivered_direct + self.delivered_relay

    @property
    def post_warmup_slots(self):
        return self.slots - self.warmup


def _se_of_mean(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float("nan")
    return float(values.std(ddof=1) / math.sqrt(values.size))


def _ratio_se(num, den):
    mask = den > 0
    if mask.sum() < 2:
        return float("nan")
    return _se_of_mean(num[mask] / den[mask])


def run_simulation(params: NetworkParams, sim: SimConfig) -> SimResult:
    """Run one slot-level simulation; deterministic for fixed (seed, params, sim)."""
    warmup = sim.resolved_warmup
    mode_id = _MODE_IDS[sim.mode]
    table = build_success_table(params, MODE_EQ1)
    si_mean = params.g * params.v_0 * params.h_0 * params.r_0 ** params.alpha
    gen = np.random.Generator(np.random.PCG64(sim.seed))
    kernel = get_kernel()
    out = kernel.run_slots(
        params.n,
        params.q_vec,
        params.q0,
        mode_id,
        table.p_d,
        table.p_0,
        table.p_0d,
        params.v_d * params.h_d,
        params.v_0 * params.h_0,
        params.v_0d * params.h_0d,
        si_mean,
        params.eta_d,
        params.eta_0,
        params.gamma_d,
        params.gamma_0,
        sim.slots,
        warmup,
        sim.n_batches,
        gen,
    )

    measured = sim.slots - warmup
    bs = out["batch_slots"].astype(float)
    empty_total = int(out["empty_slots"].sum())
    nonempty_total = int(out["nonempty_slots"].sum())
    arr_total = int(out["arr_total"].sum())
    dep_total = int(out["departures"].sum())
    direct_total = out["direct"].sum(axis=0)
    pickups_total = out["pickups"].sum(axis=0)
    deliv_total = out["relay_deliv"].sum(axis=0)
    delay_sum = out["delay_sum"].sum(axis=0)
    delay_cnt = out["delay_cnt"].sum(axis=0)

    def _cond(num_total, den_total):
        return num_total / den_total if den_total > 0 else float("nan")

    t_d = direct_total / measured
    t_r = pickups_total / measured
    with np.errstate(invalid="ignore"):
        delay = np.where(delay_cnt > 0, delay_sum / np.maximum(delay_cnt, 1), np.nan)

    n = params.n
    se_t_d = np.array([_ratio_se(out["direct"][:, i].astype(float), bs) for i in range(n)])
    se_t_r = np.array([_ratio_se(out["pickups"][:, i].astype(float), bs) for i in range(n)])
    se_t = np.array(
        [
            _ratio_se((out["direct"][:, i] + out["pickups"][:, i]).astype(float), bs)
            for i in range(n)
        ]
    )
    se_delay = np.array(
        [
            _ratio_se(out["delay_sum"][:, i].astype(float), out["delay_cnt"][:, i].astype(float))
            for i in range(n)
        ]
    )

    qlen = out["qlen"]
    # least-squares trend of the batch-mean queue length over slot time
    mask = bs > 0
    x = (warmup + (np.arange(sim.n_batches) + 0.5) * measured / sim.n_batches)[mask]
    y = out["q_sum"][mask] / bs[mask]
    nb = int(mask.sum())
    xc = x - x.mean() if nb else x
    sxx = float(xc @ xc)
    slope = float((xc @ y) / sxx) if sxx > 0 else 0.0
    if nb > 2 and sxx > 0:
        resid = y - y.mean() - slope * xc
        slope_se = math.sqrt(max(float(resid @ resid), 0.0) / (nb - 2) / sxx)
    else:
        slope_se = float("nan")

    result = SimResult(
        n=n,
        mode=sim.mode,
        kernel_backend=KERNEL_BACKEND,
        seed=sim.seed,
        slots=sim.slots,
        warmup=warmup,
        n_batches=sim.n_batches,
        lambda0=_cond(int(out["arr_empty"].sum()), empty_total),
        lambda1=_cond(int(out["arr_nonempty"].sum()), nonempty_total),
        lam=arr_total / measured,
        mu=_cond(dep_total, nonempty_total),
        p_empty=empty_total / measured,
        q_bar=float(out["q_sum"].sum()) / measured,
        se_lambda0=_ratio_se(out["arr_empty"].astype(float), out["empty_slots"].astype(float)),
        se_lambda1=_ratio_se(
            out["arr_nonempty"].astype(float), out["nonempty_slots"].astype(float)
        ),
        se_lam=_ratio_se(out["arr_total"].astype(float), bs),
        se_mu=_ratio_se(out["departures"].astype(float), out["nonempty_slots"].astype(float)),
        se_p_empty=_ratio_se(out["empty_slots"].astype(float), bs),
        se_q_bar=_ratio_se(out["q_sum"].astype(float), bs),
        t_d=t_d,
        t_r=t_r,
        t=t_d + t_r,
        se_t_d=se_t_d,
        se_t_r=se_t_r,
        se_t=se_t,
        delay=delay,
        se_delay=se_delay,
        t_d_all=float(direct_total.sum()) / (n * measured),
        t_r_all=float(pickups_total.sum()) / (n * measured),
        t_all=float(direct_total.sum() + pickups_total.sum()) / (n * measured),
        se_t_d_all=_ratio_se(out["direct"].sum(axis=1).astype(float), n * bs),
        se_t_r_all=_ratio_se(out["pickups"].sum(axis=1).astype(float), n * bs),
        se_t_all=_ratio_se((out["direct"] + out["pickups"]).sum(axis=1).astype(float), n * bs),
        delay_all=_cond(float(delay_sum.sum()), float(delay_cnt.sum())),
        se_delay_all=_ratio_se(
            out["delay_sum"].sum(axis=1).astype(float), out["delay_cnt"].sum(axis=1).astype(float)
        ),
        arrivals=arr_total,
        departures=dep_total,
        delivered_direct=int(direct_total.sum()),
        delivered_relay=int(deliv_total.sum()),
        attempted=int(out["user_attempts"].sum() + out["relay_attempts"].sum()),
        relay_delivered_per_user=deliv_total,
        qlen=qlen,
        qlen_max=int(qlen.max()),
        qlen_final=int(qlen[-1]),
        qlen_slope=slope,
        qlen_slope_se=slope_se,
        probe=None,
    )
    if sim.stability_probe:
        result = dataclasses.replace(result, probe=stability_probe(result))
    return result


def stability_probe(result: SimResult) -> str:
    """Growth test on the queue trajectory: 'stable', 'unstable' or 'inconclusive'.

    Unstable requires a significantly positive trend with a projected total
    growth of at least 100 packets over the measured window; a flat or
    negative trend (projected growth within 50 packets) reads as bounded.
    """
    post = result.post_warmup_slots
    if post < 1000 or result.n_batches < 8:
        return "inconclusive"
    slope = result.qlen_slope
    se = result.qlen_slope_se
    growth = slope * post
    if slope > 0:
        tstat = slope / se if se > 0 else float("inf")
        if tstat >= 4.0 and growth >= 100.0:
            return "unstable"
    if slope <= 0 or abs(growth) <= 50.0:
        return "stable"
    return "inconclusive"


def estimate_success_probability_sinr(
    kind, n_users, relay_active, params: NetworkParams, samples=1_000_000, seed=0
):
    """Monte Carlo estimate of one success-table entry by direct SINR sampling.

    ``kind`` is "d" (user -> destination), "0" (user -> relay) or "0d"
    (relay -> destination); ``n_users`` is the number of transmitting users
    (including the tested one for "d"/"0"); ``relay_active`` only applies to
    "d"/"0". Returns (estimate, binomial standard error).
    """
    if kind not in ("d", "0", "0d"):
        raise ParameterError("kind", f"unknown entry kind {kind!r}")
    gen = np.random.Generator(np.random.PCG64(seed))
    mean_d = params.v_d * params.h_d
    mean_0 = params.v_0 * params.h_0
    mean_0d = params.v_0d * params.h_0d
    si_mean = params.g * params.v_0 * params.h_0 * params.r_0 ** params.alpha

    if kind == "0d":
        sig = gen.exponential(mean_0d, samples)
        inter = np.zeros(samples)
        for _ in range(n_users):
            inter += gen.exponential(mean_d, samples)
        ok = sig >= params.gamma_d * (params.eta_d + inter)
    else:
        if n_users < 1:
            raise ParameterError("n_users", "need at least the tested transmitter")
        own = mean_d if kind == "d" else mean_0
        gamma = params.gamma_d if kind == "d" else params.gamma_0
        eta = params.eta_d if kind == "d" else params.eta_0
        sig = gen.exponential(own, samples)
        inter = np.zeros(samples)
        for _ in range(n_users - 1):
            inter += gen.exponential(own, samples)
        if relay_active:
            extra = mean_0d if kind == "d" else si_mean
            if extra > 0.0:
                inter += gen.exponential(extra, samples)
        ok = sig >= gamma * (eta + inter)
    p_hat = float(ok.mean())
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / samples)
    return p_hat, se
