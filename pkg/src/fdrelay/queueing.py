"""Relay-queue steady state: service rate, emptiness, mean length, stability.

The queue is a discrete-time Markov chain on the nonnegative integers whose
transition matrix is lower Hessenberg (at most one departure per slot). The
closed forms below come from the generating-function solution of that chain;
``dtmc_steady_state`` solves a truncated copy of the same chain numerically
and serves as the independent oracle for them.

Stability follows Loynes' criterion: the queue is stable iff the mean
arrival rate while busy is strictly below the mean service rate.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .drift import (
    DriftDistribution,
    drift_for,
    n_user_stability_terms,
    two_user_stability_terms,
)
from .errors import QueueFormWarning, TruncationError, UnstableQueueError
from .params import NetworkParams
from .phy import MODE_EQ1, SuccessTable, build_success_table


@dataclass(frozen=True)
class RelayQueueMetrics:
    """Steady-state relay-queue quantities.

    ``lam`` is the unconditional mean arrival rate. For an unstable queue the
    saturated values are reported instead: p_empty = 0, q_bar = inf and
    lam = lambda1.
    """

    mu: float
    lambda0: float
    lambda1: float
    lam: float
    p_empty: float
    q_bar: float
    q0_min: float
    stable: bool
    drift: DriftDistribution

    @property
    def drift_surplus(self):
        """lambda1 - mu; positive for an unstable queue."""
        return self.lambda1 - self.mu


def _stability_terms(table, params):
    if params.is_symmetric:
        return n_user_stability_terms(table, params)
    return two_user_stability_terms(table, params)


def service_rate(table: SuccessTable, params: NetworkParams) -> float:
    """Mean departures per slot given a nonempty queue: q0 times the
    activity-averaged relay -> destination success probability."""
    a, _, _ = _stability_terms(table, params)
    return params.q0 * a


def empty_probability(d: DriftDistribution, q0_min=None) -> float:
    """P(Q = 0) from the generating-function solution.

    Raises UnstableQueueError when the busy-state drift is not negative.
    """
    if d.lambda0 == 0.0:
        return 1.0
    margin = d.drift_margin
    if margin <= 0.0:
        raise UnstableQueueError(d.lambda1, margin, q0_min=q0_min)
    return margin / (margin + d.lambda0)


def mean_arrival_rate(d: DriftDistribution, q0_min=None) -> float:
    """Unconditional arrival rate: the empty/busy mixture of lambda0, lambda1."""
    p0 = empty_probability(d, q0_min=q0_min)
    return p0 * d.lambda0 + (1.0 - p0) * d.lambda1


def mean_queue_length(d: DriftDistribution, q0_min=None) -> float:
    """Mean queue length from the second derivative of the generating function."""
    if d.lambda0 == 0.0:
        return 0.0
    margin = d.drift_margin
    if margin <= 0.0:
        raise UnstableQueueError(d.lambda1, margin, q0_min=q0_min)
    k = np.arange(d.n + 1, dtype=float)
    s1 = float((k * d.p1).sum())  # sum k*p1[k]
    w0 = float((k * (k + 3.0) * d.p0).sum())
    w1 = float((k * (k + 3.0) * d.p1).sum())
    num = (s1 - d.p_minus1) * w0 + d.lambda0 * (2.0 * d.p_minus1 - w1)
    den = 2.0 * (s1 - d.p_minus1) * (d.p_minus1 - s1 + d.lambda0)
    q_bar = num / den
    if q_bar < 0.0:
        warnings.warn(
            f"mean queue length came out negative ({q_bar:.6g}); the printed "
            "closed form is outside its valid region",
            QueueFormWarning,
            stacklevel=2,
        )
    return q_bar


def q0_min(params: NetworkParams, table: SuccessTable) -> float:
    """Minimum relay transmit probability that stabilizes the queue.

    Values >= 1 (including inf when the denominator is non-positive) mean the
    queue cannot be stabilized by any q0 < 1; that is an outcome, not an error.
    """
    a, a_k, b_k = _stability_terms(table, params)
    k = np.arange(len(a_k), dtype=float)
    ka = float((k * a_k).sum())
    kb = float((k * b_k).sum())
    den = a + ka - kb
    if den <= 0.0:
        return float("inf")
    return ka / den


@dataclass(frozen=True)
class DtmcSolution:
    """Steady state of the truncated relay-queue chain."""

    p_empty: float
    mean: float
    pi: np.ndarray
    truncation: int
    tail_mass: float


def dtmc_steady_state(
    d: DriftDistribution,
    truncation=128,
    tail_tol=1e-12,
    tail_window=50,
    max_truncation=1_280_000,
) -> DtmcSolution:
    """Solve the truncated lower-Hessenberg chain for its stationary vector.

    Starting from ``truncation`` states, the level doubles until the mass in
    the last ``tail_window`` states falls below ``tail_tol``; if the cap is
    hit first a TruncationError is raised. Requires a stable drift.

    The level is kept as small as the tail test allows: the i-weighted
    rounding noise of the solved tail grows quadratically with the number of
    states and would otherwise erode the mean-queue-length accuracy.
    """
    margin = d.drift_margin
    if d.lambda0 > 0.0 and margin <= 0.0:
        raise UnstableQueueError(d.lambda1, margin)
    m = max(int(truncation), 2 * (d.n + 2), 2 * tail_window)
    while True:
        pi = _solve_truncated(d, m)
        tail = float(pi[-tail_window:].sum())
        if tail < tail_tol:
            mean = float(np.arange(m) @ pi)
            return DtmcSolution(
                p_empty=float(pi[0]), mean=mean, pi=pi, truncation=m, tail_mass=tail
            )
        if m >= max_truncation:
            raise TruncationError(m, tail, tail_tol)
        m *= 2


def _solve_truncated(d: DriftDistribution, m: int) -> np.ndarray:
    """Stationary vector of the chain truncated to states 0..m-1.

    Uses the level-crossing balance of the skip-free-to-the-left chain:
    pi[s] * p_minus1 equals the upward probability flow across the cut
    between s-1 and s. Every term is nonnegative, so the recursion has
    componentwise relative accuracy (no cancellation noise floor in the
    tail), unlike a generic linear solve.
    """
    n = d.n
    if d.lambda0 == 0.0:
        pi = np.zeros(m)
        pi[0] = 1.0
        return pi
    # tail sums: P(k or more arrivals) / P(net growth k or more), k = 1..n
    r0_tail = np.cumsum(d.r0[::-1])[::-1]
    p1_tail = np.cumsum(d.p1[::-1])[::-1]
    pi = np.zeros(m)
    pi[0] = 1.0
    pm1 = d.p_minus1
    for s in range(1, m):
        acc = pi[0] * r0_tail[s] if s <= n else 0.0
        lo = max(1, s - n)
        for i in range(lo, s):
            acc += pi[i] * p1_tail[s - i]
        pi[s] = acc / pm1
    return pi / pi.sum()


def _solve_truncated_sparse(d: DriftDistribution, m: int) -> np.ndarray:
    """Same chain via a generic sparse linear solve; cross-check for tests."""
    n = d.n
    rows = []
    cols = []
    vals = []
    # row 0: pure arrivals
    for k in range(n + 1):
        if d.r0[k] != 0.0:
            rows.append(0)
            cols.append(min(k, m - 1))
            vals.append(float(d.r0[k]))
    # rows i >= 1: one possible departure, up to n arrivals (mass above the
    # truncation is folded into the last state)
    for i in range(1, m):
        if d.p_minus1 != 0.0:
            rows.append(i)
            cols.append(i - 1)
            vals.append(float(d.p_minus1))
        for k in range(n + 1):
            if d.p1[k] != 0.0:
                rows.append(i)
                cols.append(min(i + k, m - 1))
                vals.append(float(d.p1[k]))
    p = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsr()
    a = (p.T - scipy.sparse.identity(m, format="csr")).tolil()
    a[m - 1, :] = 1.0
    b = np.zeros(m)
    b[m - 1] = 1.0
    pi = scipy.sparse.linalg.spsolve(a.tocsr(), b)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def analyze_relay_queue(
    params: NetworkParams, table: SuccessTable | None = None, mode=MODE_EQ1
) -> RelayQueueMetrics:
    """Closed-form relay-queue metrics with instability as a typed outcome."""
    if table is None:
        table = build_success_table(params, mode)
    d = drift_for(params, table)
    mu = service_rate(table, params)
    q0m = q0_min(params, table)
    stable = d.lambda0 == 0.0 or d.drift_margin > 0.0
    if stable:
        p_empty = empty_probability(d, q0_min=q0m)
        lam = mean_arrival_rate(d, q0_min=q0m)
        q_bar = mean_queue_length(d, q0_min=q0m)
    else:
        p_empty = 0.0
        lam = d.lambda1
        q_bar = float("inf")
    return RelayQueueMetrics(
        mu=mu,
        lambda0=d.lambda0,
        lambda1=d.lambda1,
        lam=lam,
        p_empty=p_empty,
        q_bar=q_bar,
        q0_min=q0m,
        stable=stable,
        drift=d,
    )
