"""Per-slot relay-queue change laws.

The relay queue sees two conditional regimes: when the queue is empty the
relay stays silent and the queue can only grow; when it is nonempty the
relay transmits with probability q0 and the queue may also shrink by one.
This module computes the per-slot arrival and net-change distributions via
closed forms (two-user and symmetric n-user) and via an exact enumeration
over the joint transmit/reception event space, used as an oracle for the
closed forms.

A packet from an active user enters the relay queue iff its direct
transmission to the destination failed while the relay decoded it; the
head-of-line relay packet departs iff the relay transmitted and reached the
destination. Conditioned on the transmit set, all per-link receptions are
independent.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationLimitError, ModelError, ParameterError
from .params import NetworkParams
from .phy import DEST, RELAY, SuccessTable, build_success_table, success_probability


@dataclass(frozen=True)
class DriftDistribution:
    """Queue-change laws conditioned on empty/nonempty relay queue.

    Arrays have length n+1 and are indexed by packet count k:
    ``r0[k]`` / ``r1[k]``: probability of k arrivals given empty / nonempty;
    ``p1[k]``: probability the queue grows by exactly k given nonempty
    (``p1[0]`` is the zero-net-change probability); ``p_minus1``: probability
    the queue shrinks by one, given nonempty. Given an empty queue the
    net-change law equals the arrival law, so ``p0`` aliases ``r0``.
    """

    n: int
    r0: np.ndarray
    r1: np.ndarray
    p1: np.ndarray
    p_minus1: float

    @property
    def p0(self):
        return self.r0

    @property
    def p1_zero(self):
        return float(self.p1[0])

    @property
    def lambda0(self):
        """Mean arrivals per slot given an empty queue."""
        return float(np.arange(self.n + 1) @ self.r0)

    @property
    def lambda1(self):
        """Mean arrivals per slot given a nonempty queue."""
        return float(np.arange(self.n + 1) @ self.r1)

    @property
    def drift_margin(self):
        """p_minus1 - sum_k k*p1[k]; positive iff the queue drifts down."""
        return float(self.p_minus1 - np.arange(self.n + 1) @ self.p1)

    def validate(self, tol=1e-12):
        """Check completeness and range invariants; raise ValueError on failure."""
        for name, vec in (("r0", self.r0), ("r1", self.r1), ("p1", self.p1)):
            if vec.shape != (self.n + 1,):
                raise ValueError(f"{name} must have length n+1")
            if np.any(vec < -tol) or np.any(vec > 1.0 + tol):
                raise ValueError(f"{name} has entries outside [0, 1]")
        if not -tol <= self.p_minus1 <= 1.0 + tol:
            raise ValueError("p_minus1 outside [0, 1]")
        if abs(self.r0.sum() - 1.0) > tol:
            raise ValueError("r0 does not sum to 1")
        if abs(self.r1.sum() - 1.0) > tol:
            raise ValueError("r1 does not sum to 1")
        if abs(self.p_minus1 + self.p1.sum() - 1.0) > tol:
            raise ValueError("nonempty net-change law does not sum to 1")

    def max_abs_diff(self, other):
        """Largest componentwise difference against another distribution."""
        return max(
            float(np.max(np.abs(self.r0 - other.r0))),
            float(np.max(np.abs(self.r1 - other.r1))),
            float(np.max(np.abs(self.p1 - other.p1))),
            abs(self.p_minus1 - other.p_minus1),
        )


def two_user_drift(table: SuccessTable, params: NetworkParams) -> DriftDistribution:
    """Two-user closed forms, transcribed term by term from the appendix.

    Users may have different transmit probabilities q1, q2; link geometry is
    shared, so success probabilities depend on transmit counts only.
    """
    if params.n != 2 or table.n != 2:
        raise ModelError("two-user closed forms require n = 2")
    q1, q2 = params.q_vec
    q0 = params.q0

    # count-indexed entries; e.g. Pd_2_1 is user -> destination with both
    # users transmitting and the relay also active
    Pd_1_0, Pd_1_1 = table.p_d[1]
    Pd_2_0, Pd_2_1 = table.p_d[2]
    P0_1_0, P0_1_1 = table.p_0[1]
    P0_2_0, P0_2_1 = table.p_0[2]
    P0d_0, P0d_1, P0d_2 = table.p_0d

    r1_0 = (
        q1 * (1 - q2) * (1 - Pd_1_0) * P0_1_0
        + q2 * (1 - q1) * (1 - Pd_1_0) * P0_1_0
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
    )
    r2_0 = q1 * q2 * (1 - Pd_2_0) * (1 - Pd_2_0) * P0_2_0 * P0_2_0

    r1_1 = (
        (1 - q0) * q1 * (1 - q2) * (1 - Pd_1_0) * P0_1_0
        + q0 * q1 * (1 - q2) * (1 - Pd_1_1) * P0_1_1
        + (1 - q0) * q2 * (1 - q1) * (1 - Pd_1_0) * P0_1_0
        + q0 * q2 * (1 - q1) * (1 - Pd_1_1) * P0_1_1
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + q0 * q1 * q2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + q0 * q1 * q2 * (1 - Pd_2_1) * P0_2_1 * Pd_2_1
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + q0 * q1 * q2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + q0 * q1 * q2 * (1 - Pd_2_1) * P0_2_1 * Pd_2_1
    )
    r2_1 = (
        (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * P0_2_0
        + q0 * q1 * q2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * P0_2_1
    )

    pm1 = (
        q0 * (1 - q1) * (1 - q2) * P0d_0
        + q0 * (1 - q1) * q2 * P0d_1 * Pd_1_1
        + q0 * (1 - q1) * q2 * P0d_1 * (1 - Pd_1_1) * (1 - P0_1_1)
        + q0 * q1 * (1 - q2) * P0d_1 * Pd_1_1
        + q0 * q1 * (1 - q2) * P0d_1 * (1 - Pd_1_1) * (1 - P0_1_1)
        + q0 * q1 * q2 * P0d_2 * Pd_2_1 * Pd_2_1
        + q0 * q1 * q2 * P0d_2 * (1 - Pd_2_1) * (1 - P0_2_1) * (1 - Pd_2_1) * (1 - P0_2_1)
        + q0 * q1 * q2 * P0d_2 * Pd_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
        + q0 * q1 * q2 * P0d_2 * (1 - Pd_2_1) * (1 - P0_2_1) * Pd_2_1
    )

    p1_1 = (
        (1 - q0) * q1 * (1 - q2) * (1 - Pd_1_0) * P0_1_0
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + (1 - q0) * (1 - q1) * q2 * (1 - Pd_1_0) * P0_1_0
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + q0 * q1 * q2 * P0d_2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * P0_2_1
        + q0 * q1 * (1 - q2) * (1 - P0d_1) * (1 - Pd_1_1) * P0_1_1
        + q0 * q1 * q2 * (1 - P0d_2) * (1 - Pd_2_1) * P0_2_1 * Pd_2_1
        + q0 * q1 * q2 * (1 - P0d_2) * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
        + q0 * q2 * (1 - q1) * (1 - P0d_1) * (1 - Pd_1_1) * P0_1_1
        + q0 * q1 * q2 * (1 - P0d_2) * (1 - Pd_2_1) * P0_2_1 * Pd_2_1
        + q0 * q1 * q2 * (1 - P0d_2) * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
    )
    p2_1 = (
        (1 - q0) * q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * P0_2_0
        + q0 * q1 * q2 * (1 - P0d_2) * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * P0_2_1
    )
    p0_1 = 1.0 - pm1 - p1_1 - p2_1

    return DriftDistribution(
        n=2,
        r0=np.array([1.0 - r1_0 - r2_0, r1_0, r2_0]),
        r1=np.array([1.0 - r1_1 - r2_1, r1_1, r2_1]),
        p1=np.array([p0_1, p1_1, p2_1]),
        p_minus1=pm1,
    )


def two_user_stability_terms(table: SuccessTable, params: NetworkParams):
    """(A, A_k, B_k) of the two-user stability decomposition.

    r_k^1 = (1-q0) A_k + q0 B_k and mu = q0 A.
    """
    if params.n != 2:
        raise ModelError("two-user terms require n = 2")
    q1, q2 = params.q_vec
    Pd_1_0, Pd_1_1 = table.p_d[1]
    Pd_2_0, Pd_2_1 = table.p_d[2]
    P0_1_0, P0_1_1 = table.p_0[1]
    P0_2_0, P0_2_1 = table.p_0[2]
    a1 = (
        q1 * (1 - q2) * (1 - Pd_1_0) * P0_1_0
        + q2 * (1 - q1) * (1 - Pd_1_0) * P0_1_0
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * (1 - P0_2_0)
        + q1 * q2 * (1 - Pd_2_0) * P0_2_0 * Pd_2_0
    )
    b1 = (
        q1 * (1 - q2) * (1 - Pd_1_1) * P0_1_1
        + q2 * (1 - q1) * (1 - Pd_1_1) * P0_1_1
        + q1 * q2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
        + q1 * q2 * (1 - Pd_2_1) * P0_2_1 * Pd_2_1
        + q1 * q2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * (1 - P0_2_1)
        + q1 * q2 * (1 - Pd_2_1) * P0_2_1 * Pd_2_1
    )
    a2 = q1 * q2 * (1 - Pd_2_0) * P0_2_0 * (1 - Pd_2_0) * P0_2_0
    b2 = q1 * q2 * (1 - Pd_2_1) * P0_2_1 * (1 - Pd_2_1) * P0_2_1
    a = (
        (1 - q1) * (1 - q2) * table.p_0d[0]
        + q1 * (1 - q2) * table.p_0d[1]
        + q2 * (1 - q1) * table.p_0d[1]
        + q1 * q2 * table.p_0d[2]
    )
    return a, np.array([0.0, a1, a2]), np.array([0.0, b1, b2])


def n_user_stability_terms(table: SuccessTable, params: NetworkParams):
    """(A, A_k, B_k) of the symmetric n-user stability decomposition."""
    if not params.is_symmetric:
        raise ModelError("symmetric closed forms require a common q")
    n = params.n
    q = params.q_scalar
    a_k = np.zeros(n + 1)
    b_k = np.zeros(n + 1)
    for k in range(1, n + 1):
        for i in range(k, n + 1):
            c = math.comb(n, i) * math.comb(i, k) * q**i * (1 - q) ** (n - i)
            arr0 = table.p_0[i, 0] * (1 - table.p_d[i, 0])
            arr1 = table.p_0[i, 1] * (1 - table.p_d[i, 1])
            a_k[k] += c * arr0**k * (1 - arr0) ** (i - k)
            b_k[k] += c * arr1**k * (1 - arr1) ** (i - k)
    a = sum(
        math.comb(n, k) * q**k * (1 - q) ** (n - k) * table.p_0d[k] for k in range(n + 1)
    )
    return a, a_k, b_k


def n_user_drift(table: SuccessTable, params: NetworkParams) -> DriftDistribution:
    """Symmetric n-user closed forms (binomial sums over transmit counts)."""
    if not params.is_symmetric:
        raise ModelError("symmetric closed forms require a common q")
    n = params.n
    q = params.q_scalar
    q0 = params.q0

    a, a_k, b_k = n_user_stability_terms(table, params)
    r0 = np.zeros(n + 1)
    r1 = np.zeros(n + 1)
    r0[1:] = a_k[1:]
    r1[1:] = (1 - q0) * a_k[1:] + q0 * b_k[1:]
    r0[0] = 1.0 - r0[1:].sum()
    r1[0] = 1.0 - r1[1:].sum()

    pm1 = 0.0
    for k in range(n + 1):
        c = math.comb(n, k) * q**k * (1 - q) ** (n - k)
        arr1 = table.p_0[k, 1] * (1 - table.p_d[k, 1]) if k >= 1 else 0.0
        pm1 += c * table.p_0d[k] * (1 - arr1) ** k
    pm1 *= q0

    p1 = np.zeros(n + 1)
    for k in range(1, n + 1):
        total = (1 - q0) * a_k[k]
        # relay transmits but its own packet fails: k arrivals, no departure
        for i in range(k, n + 1):
            c = math.comb(n, i) * math.comb(i, k) * q**i * (1 - q) ** (n - i)
            arr1 = table.p_0[i, 1] * (1 - table.p_d[i, 1])
            total += q0 * c * (1 - table.p_0d[i]) * arr1**k * (1 - arr1) ** (i - k)
        # relay transmits and succeeds: k+1 arrivals net one departure
        for i in range(k + 1, n + 1):
            c = math.comb(n, i) * math.comb(i, k + 1) * q**i * (1 - q) ** (n - i)
            arr1 = table.p_0[i, 1] * (1 - table.p_d[i, 1])
            total += q0 * c * table.p_0d[i] * arr1 ** (k + 1) * (1 - arr1) ** (i - k - 1)
        p1[k] = total
    p1[0] = 1.0 - pm1 - p1[1:].sum()

    return DriftDistribution(n=n, r0=r0, r1=r1, p1=p1, p_minus1=pm1)


def _enumerate_state(params: NetworkParams, relay_may_transmit: bool):
    """Exact per-slot law for one queue conditioning.

    Sums over every transmit subset and, per subset, every joint reception
    outcome; per-user link successes are independent given the transmit set.
    Returns (arrivals, net_change, p_minus1) where both vectors have length
    n+1 and net_change[k] is the probability of net growth by k.
    """
    n = params.n
    qv = params.q_vec
    q0 = params.q0
    r = np.zeros(n + 1)
    p = np.zeros(n + 1)
    pm1 = 0.0

    branches = ((False, 1.0),) if not relay_may_transmit else ((False, 1.0 - q0), (True, q0))
    for mask in range(1 << n):
        p_set = 1.0
        members = []
        for b in range(n):
            if mask >> b & 1:
                members.append(b + 1)
                p_set *= qv[b]
            else:
                p_set *= 1.0 - qv[b]
        if p_set == 0.0:
            continue
        for relay_tx, p_branch in branches:
            weight = p_set * p_branch
            if weight == 0.0:
                continue
            tset = frozenset(members) | ({RELAY} if relay_tx else frozenset())
            arrival_p = [
                (1.0 - success_probability(u, DEST, tset, params))
                * success_probability(u, RELAY, tset, params)
                for u in members
            ]
            dep_p = success_probability(RELAY, DEST, tset, params) if relay_tx else 0.0

            # depth-first walk over per-user arrival outcomes
            stack = [(0, 0, weight)]
            while stack:
                level, k, w = stack.pop()
                if level == len(members):
                    r[k] += w
                    if relay_tx:
                        if k == 0:
                            pm1 += w * dep_p
                        else:
                            p[k - 1] += w * dep_p
                        p[k] += w * (1.0 - dep_p)
                    else:
                        p[k] += w
                    continue
                ap = arrival_p[level]
                if ap > 0.0:
                    stack.append((level + 1, k + 1, w * ap))
                if ap < 1.0:
                    stack.append((level + 1, k, w * (1.0 - ap)))
    return r, p, pm1


def enumerate_drift(params: NetworkParams, queue_state="both") -> DriftDistribution:
    """Exact drift law by enumeration; the oracle for the closed forms.

    ``queue_state`` selects the conditioning: "both" (default) fills the
    empty-queue law into r0/p0 and the nonempty-queue law into r1/p1;
    "empty" / "nonempty" replicate the single requested conditioning into
    both sides, which is occasionally useful for targeted probes.

    Enumeration cost grows as 3^n; refuse n > 12.
    """
    if params.n > 12:
        raise EnumerationLimitError(
            f"n = {params.n} too large for exact enumeration (limit 12)"
        )
    if queue_state not in ("both", "empty", "nonempty"):
        raise ParameterError("queue_state", f"unknown conditioning {queue_state!r}")

    if queue_state == "empty":
        r0, p0, _ = _enumerate_state(params, relay_may_transmit=False)
        return DriftDistribution(n=params.n, r0=r0, r1=r0.copy(), p1=p0.copy(), p_minus1=0.0)
    if queue_state == "nonempty":
        r1, p1, pm1 = _enumerate_state(params, relay_may_transmit=True)
        return DriftDistribution(n=params.n, r0=r1.copy(), r1=r1, p1=p1, p_minus1=pm1)
    r0, _, _ = _enumerate_state(params, relay_may_transmit=False)
    r1, p1, pm1 = _enumerate_state(params, relay_may_transmit=True)
    return DriftDistribution(n=params.n, r0=r0, r1=r1, p1=p1, p_minus1=pm1)


def drift_for(params: NetworkParams, table: SuccessTable | None = None) -> DriftDistribution:
    """Closed-form drift via the matching pipeline for this network shape."""
    if table is None:
        table = build_success_table(params)
    if params.is_symmetric:
        return n_user_drift(table, params)
    if params.n == 2:
        return two_user_drift(table, params)
    raise ModelError("asymmetric transmit probabilities are closed-form only for n = 2")
