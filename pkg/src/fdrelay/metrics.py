"""Per-user and aggregate throughput, relayed fraction, and per-packet delay.

Throughput splits into a direct part (packet reaches the destination on its
own) and a relayed part (destination missed it, relay decoded it); under a
stable relay queue the relayed part equals the per-user arrival rate into
the queue and every relayed packet is eventually delivered. Each mixture
weights the relay-active case by q0 * P(Q > 0), a product that is constant
across q0 inside the stability region.
"""

import math
from dataclasses import dataclass

import numpy as np

from .drift import drift_for
from .errors import ContractError, UnstableQueueError
from .params import NetworkParams
from .phy import MODE_EQ1, SuccessTable, build_success_table
from .queueing import RelayQueueMetrics, analyze_relay_queue


@dataclass(frozen=True)
class PerformanceReport:
    """Throughput and delay summary for one network configuration.

    Per-user arrays have length n. When the relay queue is unstable the
    relayed/total throughput interpretation breaks down: those fields are
    NaN, ``t_aggr`` carries the saturated-relay aggregate (direct sum plus
    relay service rate), and delays are unbounded (inf).
    """

    t_direct: np.ndarray
    t_relayed: np.ndarray
    t_total: np.ndarray
    t_aggr: float
    stable: bool
    d_queue: float | None = None
    d_relay: float | None = None
    delay: np.ndarray | None = None

    @property
    def relayed_fraction_per_user(self):
        out = np.full_like(self.t_total, np.nan)
        mask = self.t_total > 0
        out[mask] = self.t_relayed[mask] / self.t_total[mask]
        return out

    @property
    def relayed_fraction(self):
        total = float(self.t_total.sum())
        if not np.isfinite(total) or total <= 0.0:
            return float("nan")
        return float(self.t_relayed.sum()) / total


def _direct_relayed_symmetric(table, params, w):
    """(T_D, T_R) of one user in the symmetric case, relay active w.p. w."""
    n, q = params.n, params.q_scalar
    t_d = t_r = 0.0
    for k in range(n):
        c = math.comb(n - 1, k) * q ** (k + 1) * (1 - q) ** (n - 1 - k)
        t_d += c * (w * table.p_d[k + 1, 1] + (1 - w) * table.p_d[k + 1, 0])
        t_r += c * (
            w * (1 - table.p_d[k + 1, 1]) * table.p_0[k + 1, 1]
            + (1 - w) * (1 - table.p_d[k + 1, 0]) * table.p_0[k + 1, 0]
        )
    return t_d, t_r


def _direct_relayed_two_user(table, params, w):
    """Per-user (T_D, T_R) arrays for the (possibly asymmetric) two-user case."""
    q = params.q_vec
    t_d = np.zeros(2)
    t_r = np.zeros(2)
    for i, j in ((0, 1), (1, 0)):
        qi, qj = q[i], q[j]
        t_d[i] = w * qi * ((1 - qj) * table.p_d[1, 1] + qj * table.p_d[2, 1]) + (
            1 - w
        ) * qi * ((1 - qj) * table.p_d[1, 0] + qj * table.p_d[2, 0])
        t_r[i] = w * qi * (
            (1 - qj) * (1 - table.p_d[1, 1]) * table.p_0[1, 1]
            + qj * (1 - table.p_d[2, 1]) * table.p_0[2, 1]
        ) + (1 - w) * qi * (
            (1 - qj) * (1 - table.p_d[1, 0]) * table.p_0[1, 0]
            + qj * (1 - table.p_d[2, 0]) * table.p_0[2, 0]
        )
    return t_d, t_r


def throughput_two_user(
    metrics: RelayQueueMetrics, table: SuccessTable, params: NetworkParams
) -> PerformanceReport:
    """Two-user throughput under a stable relay queue."""
    if params.n != 2:
        raise ContractError("two-user throughput requires n = 2")
    if not metrics.stable:
        raise UnstableQueueError(
            metrics.lambda1, metrics.mu - metrics.lambda1, q0_min=metrics.q0_min
        )
    w = params.q0 * (1.0 - metrics.p_empty)
    t_d, t_r = _direct_relayed_two_user(table, params, w)
    t = t_d + t_r
    return PerformanceReport(
        t_direct=t_d, t_relayed=t_r, t_total=t, t_aggr=float(t.sum()), stable=True
    )


def throughput_n_user(
    metrics: RelayQueueMetrics, table: SuccessTable, params: NetworkParams
) -> PerformanceReport:
    """Symmetric n-user throughput under a stable relay queue."""
    if not params.is_symmetric:
        raise ContractError("n-user throughput requires a symmetric q")
    if not metrics.stable:
        raise UnstableQueueError(
            metrics.lambda1, metrics.mu - metrics.lambda1, q0_min=metrics.q0_min
        )
    w = params.q0 * (1.0 - metrics.p_empty)
    t_d, t_r = _direct_relayed_symmetric(table, params, w)
    n = params.n
    t_direct = np.full(n, t_d)
    t_relayed = np.full(n, t_r)
    t_total = t_direct + t_relayed
    return PerformanceReport(
        t_direct=t_direct,
        t_relayed=t_relayed,
        t_total=t_total,
        t_aggr=float(n * (t_d + t_r)),
        stable=True,
    )


def aggregate_throughput_unstable(
    table: SuccessTable, params: NetworkParams, mu: float
) -> float:
    """Aggregate throughput with a saturated (unstable) relay queue.

    The queue never empties, so each user's direct throughput is evaluated
    with relay-active probability q0, and the relay contributes its service
    rate. Calling this on a stable configuration is a contract error.
    """
    d = drift_for(params, table)
    if d.lambda0 == 0.0 or d.drift_margin > 0.0:
        raise ContractError("relay queue is stable; use the stable throughput forms")
    if params.is_symmetric:
        t_d, _ = _direct_relayed_symmetric(table, params, params.q0)
        direct_sum = params.n * t_d
    else:
        t_d, _ = _direct_relayed_two_user(table, params, params.q0)
        direct_sum = float(t_d.sum())
    return direct_sum + mu


def relayed_fraction(report: PerformanceReport) -> np.ndarray:
    """Share of each user's delivered traffic that traversed the relay.

    NaN marks users with zero total throughput (undefined fraction).
    """
    return report.relayed_fraction_per_user


def average_delay(report: PerformanceReport, metrics: RelayQueueMetrics):
    """Mean head-of-line-to-delivery delay per user, in slots.

    Returns an updated report carrying the per-user delays and the queueing
    decomposition D_Q (time in the relay queue, by Little's law) and
    D_R = D_Q + 1/mu. An unstable queue yields unbounded (inf) delays; the
    drift surplus lambda1 - mu is available on ``metrics``.
    """
    n = len(report.t_total)
    if not (report.stable and metrics.stable):
        return PerformanceReport(
            t_direct=report.t_direct,
            t_relayed=report.t_relayed,
            t_total=report.t_total,
            t_aggr=report.t_aggr,
            stable=False,
            d_queue=float("inf"),
            d_relay=float("inf"),
            delay=np.full(n, np.inf),
        )
    d_queue = metrics.q_bar / metrics.lam if metrics.lam > 0.0 else 0.0
    d_relay = d_queue + (1.0 / metrics.mu if metrics.mu > 0.0 else float("inf"))
    delay = np.full(n, np.inf)
    for i in range(n):
        t_i = report.t_total[i]
        if t_i > 0.0:
            extra = report.t_relayed[i] * d_relay if report.t_relayed[i] > 0.0 else 0.0
            delay[i] = (1.0 + extra) / t_i
    return PerformanceReport(
        t_direct=report.t_direct,
        t_relayed=report.t_relayed,
        t_total=report.t_total,
        t_aggr=report.t_aggr,
        stable=True,
        d_queue=d_queue,
        d_relay=d_relay,
        delay=delay,
    )


def no_relay_baseline(params: NetworkParams):
    """(throughput, delay) per user for the same network without the relay.

    Each user succeeds against the other active users only; delay is the
    geometric retransmission mean 1/T.
    """
    table = build_success_table(params, MODE_EQ1)
    n = params.n
    if params.is_symmetric:
        q = params.q_scalar
        t1 = q * sum(
            math.comb(n - 1, k) * q**k * (1 - q) ** (n - 1 - k) * table.p_d[k + 1, 0]
            for k in range(n)
        )
        t = np.full(n, t1)
    else:
        qv = params.q_vec
        t = np.array(
            [
                qv[i]
                * ((1 - qv[1 - i]) * table.p_d[1, 0] + qv[1 - i] * table.p_d[2, 0])
                for i in range(2)
            ]
        )
    with np.errstate(divide="ignore"):
        d = np.where(t > 0.0, 1.0 / t, np.inf)
    return t, d


def full_report(
    params: NetworkParams,
    table: SuccessTable | None = None,
    mode=MODE_EQ1,
    metrics: RelayQueueMetrics | None = None,
) -> tuple[PerformanceReport, RelayQueueMetrics]:
    """Complete analytical pipeline: queue metrics plus throughput and delay.

    Pass ``metrics`` to evaluate the throughput/delay layer on externally
    obtained queue quantities (e.g. from the truncated-chain or enumeration
    oracles) instead of the closed forms.
    """
    if table is None:
        table = build_success_table(params, mode)
    if metrics is None:
        metrics = analyze_relay_queue(params, table=table, mode=mode)
    if metrics.stable:
        if params.is_symmetric:
            report = throughput_n_user(metrics, table, params)
        else:
            report = throughput_two_user(metrics, table, params)
        report = average_delay(report, metrics)
    else:
        n = params.n
        nan = np.full(n, np.nan)
        t_aggr = aggregate_throughput_unstable(table, params, metrics.mu)
        if params.is_symmetric:
            t_d, _ = _direct_relayed_symmetric(table, params, params.q0)
            t_direct = np.full(n, t_d)
        else:
            t_direct, _ = _direct_relayed_two_user(table, params, params.q0)
        report = PerformanceReport(
            t_direct=t_direct,
            t_relayed=nan,
            t_total=nan.copy(),
            t_aggr=t_aggr,
            stable=False,
            d_queue=float("inf"),
            d_relay=float("inf"),
            delay=np.full(n, np.inf),
        )
    return report, metrics
