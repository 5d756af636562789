"""Link budgets and SINR-threshold success probabilities.

A transmission from node ``i`` to receiver ``j`` succeeds iff its SINR
clears the receiver threshold under Rayleigh fading. With exponentially
distributed received powers (mean v*h per link) the outage complement has
the closed product form

    P = exp(-gamma*eta / (v*h)) * (1 + gamma * r^alpha * g)^-m
        * prod_k (1 + gamma * v_k*h_k / (v*h))^-1

where the product runs over the other transmitting nodes, and m = 1 only
when the receiver itself transmits in the same slot (full-duplex relay
residual self-interference).

Nodes are encoded as: relay = 0, users = 1..n, destination = DEST.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParameterError
from .params import NetworkParams

RELAY = 0
DEST = "d"

MODE_EQ1 = "eq1-derived"
MODE_LITERAL = "literal-paper"
TABLE_MODES = (MODE_EQ1, MODE_LITERAL)


def link_gain(p_tx, r, alpha):
    """Received power factor p_tx * r^-alpha of a link.

    Args:
        p_tx: transmit power in watts, > 0.
        r: link distance in meters, > 0.
        alpha: path-loss exponent, >= 0.
    """
    if p_tx <= 0.0:
        raise ParameterError("p_tx", f"must be > 0, got {p_tx}")
    if r <= 0.0:
        raise ParameterError("r", f"must be > 0, got {r}")
    if alpha < 0.0:
        raise ParameterError("alpha", f"must be >= 0, got {alpha}")
    return p_tx * r ** -alpha


@dataclass(frozen=True)
class LinkBudget:
    """Receiver-side budget of one link: received power factor, fading mean,
    SINR threshold, noise power, and the link distance (for the residual
    self-interference scaling). Derived from NetworkParams only."""

    h: float
    v: float
    gamma: float
    eta: float
    r: float

    def __post_init__(self):
        if self.h <= 0.0:
            raise ParameterError("h", "received power factor must be > 0")


def link_budget(tx, rx, params) -> LinkBudget:
    """Budget of the tested link tx -> rx."""
    if rx == DEST:
        if tx == RELAY:
            return LinkBudget(params.h_0d, params.v_0d, params.gamma_d, params.eta_d, params.r_0d)
        return LinkBudget(params.h_d, params.v_d, params.gamma_d, params.eta_d, params.r_d)
    if rx == RELAY:
        if tx == RELAY:
            raise ContractError("relay cannot transmit to itself")
        return LinkBudget(params.h_0, params.v_0, params.gamma_0, params.eta_0, params.r_0)
    raise ContractError(f"unknown receiver {rx!r}")


def _interferer_power(k, rx, params):
    """Mean received power v*h of interferer k at receiver rx."""
    if rx == DEST:
        if k == RELAY:
            return params.v_0d * params.h_0d
        return params.v_d * params.h_d
    return params.v_0 * params.h_0  # user at the relay


def success_probability(tx, rx, transmit_set, params):
    """Success probability of the link tx -> rx given the set of transmitters.

    ``transmit_set`` must contain ``tx``; it may contain the relay even when
    the relay is the receiver (full-duplex operation), in which case the
    residual self-interference factor applies.
    """
    tset = frozenset(transmit_set)
    if tx not in tset:
        raise ContractError(f"transmitter {tx!r} not in transmit set {sorted(map(str, tset))}")
    if DEST in tset:
        raise ContractError("destination never transmits")
    if rx in tset and rx != RELAY:
        raise ContractError(f"receiver {rx!r} in transmit set but is not the relay")

    link = link_budget(tx, rx, params)
    own = link.v * link.h
    value = math.exp(-link.gamma * link.eta / own)
    if rx in tset:  # full-duplex receiver: residual self-interference
        value /= 1.0 + link.gamma * link.r ** params.alpha * params.g
    for k in tset:
        if k == tx or k == rx:
            continue
        value /= 1.0 + link.gamma * _interferer_power(k, rx, params) / own
    return value


@dataclass(frozen=True)
class SuccessTable:
    """All per-link success probabilities indexed by transmit counts.

    ``p_d[i, j]``: user -> destination with i transmitting users total
    (i >= 1) and relay silent (j=0) or transmitting (j=1).
    ``p_0[i, j]``: user -> relay, same indexing.
    ``p_0d[k]``: relay -> destination with k transmitting users, k = 0..n.

    Because all users share link geometry and powers, these count-indexed
    entries cover every transmit-set combination, including the two-user
    asymmetric case; ``success`` maps (transmitter, set, receiver) onto them.
    """

    n: int
    p_d: np.ndarray
    p_0: np.ndarray
    p_0d: np.ndarray
    mode: str
    g: float

    def success(self, tx, transmit_set, rx):
        """Table lookup for the link tx -> rx under the given transmit set."""
        tset = frozenset(transmit_set)
        if tx not in tset:
            raise ContractError(f"transmitter {tx!r} not in transmit set")
        users = len(tset - {RELAY})
        j = 1 if RELAY in tset else 0
        if tx == RELAY:
            if rx != DEST:
                raise ContractError("relay transmits to the destination only")
            return float(self.p_0d[users])
        if rx == DEST:
            return float(self.p_d[users, j])
        if rx == RELAY:
            return float(self.p_0[users, j])
        raise ContractError(f"unknown receiver {rx!r}")

    def validate(self, tol=1e-12):
        """Check range and monotonicity invariants; raise ValueError on failure."""
        for name, arr in (("p_d", self.p_d[1:]), ("p_0", self.p_0[1:]), ("p_0d", self.p_0d)):
            if np.any(arr < -tol) or np.any(arr > 1.0 + tol):
                raise ValueError(f"{name} has entries outside [0, 1]")
        for name, arr in (("p_d", self.p_d), ("p_0", self.p_0)):
            if np.any(np.diff(arr[1:], axis=0) > tol):
                raise ValueError(f"{name} not non-increasing in the number of transmitters")
            if np.any(arr[1:, 1] - arr[1:, 0] > tol):
                raise ValueError(f"{name} not non-increasing in relay activity")
        if np.any(np.diff(self.p_0d) > tol):
            raise ValueError("p_0d not non-increasing in the number of transmitters")
        gap = self.p_0[1:, 0] - self.p_0[1:, 1]
        if self.g == 0.0 and np.any(np.abs(gap) > tol):
            raise ValueError("g = 0 must make relay transmission harmless at the relay")
        if self.g > 0.0 and np.any(gap <= -tol):
            raise ValueError("relay transmission must not improve reception at the relay")


def build_success_table(params: NetworkParams, mode=MODE_EQ1) -> SuccessTable:
    """Build the complete success-probability table.

    ``eq1-derived`` (default) evaluates every entry from the single SINR
    outage formula over the appropriate transmit set. ``literal-paper``
    evaluates the symmetric closed forms exactly as printed, including their
    debatable threshold placements; it exists to document the differences
    (see :func:`compare_table_modes`).
    """
    if mode not in TABLE_MODES:
        raise ParameterError("mode", f"must be one of {TABLE_MODES}, got {mode!r}")
    n = params.n
    p_d = np.zeros((n + 1, 2))
    p_0 = np.zeros((n + 1, 2))
    p_0d = np.zeros(n + 1)
    if mode == MODE_EQ1:
        for i in range(1, n + 1):
            users = frozenset(range(1, i + 1))
            both = users | {RELAY}
            p_d[i, 0] = success_probability(1, DEST, users, params)
            p_d[i, 1] = success_probability(1, DEST, both, params)
            p_0[i, 0] = success_probability(1, RELAY, users, params)
            p_0[i, 1] = success_probability(1, RELAY, both, params)
        for k in range(n + 1):
            tset = frozenset(range(1, k + 1)) | {RELAY}
            p_0d[k] = success_probability(RELAY, DEST, tset, params)
    else:
        beta = params.beta
        base_d = math.exp(-params.gamma_d * params.eta_d / (params.v_d * params.h_d))
        base_0 = math.exp(-params.gamma_0 * params.eta_0 / (params.v_0 * params.h_0))
        # As printed, the relay -> destination baseline reuses the user -> relay
        # exponent and the relay-interference factor at the destination uses the
        # relay threshold; both deviate from the outage formula.
        base_0d = math.exp(-params.gamma_0 * params.eta_0 / (params.v_0 * params.h_0))
        si = 1.0 / (1.0 + params.gamma_0 * params.r_0 ** params.alpha * params.g)
        for i in range(1, n + 1):
            p_d[i, 0] = base_d * (1.0 / (1.0 + params.gamma_d)) ** (i - 1)
            p_d[i, 1] = p_d[i, 0] / (1.0 + beta * params.gamma_0)
            p_0[i, 0] = base_0 * (1.0 / (1.0 + params.gamma_0)) ** (i - 1)
            p_0[i, 1] = p_0[i, 0] * si
        for k in range(n + 1):
            p_0d[k] = base_0d * (1.0 / (1.0 + params.gamma_d / beta)) ** k
    return SuccessTable(n=n, p_d=p_d, p_0=p_0, p_0d=p_0d, mode=mode, g=params.g)


def compare_table_modes(params: NetworkParams, tol=1e-12):
    """Entry-wise diff report between the two table modes.

    Returns a list of (entry, eq1_value, literal_value, diff, flagged) tuples,
    flagged when |diff| > tol.
    """
    eq1 = build_success_table(params, MODE_EQ1)
    lit = build_success_table(params, MODE_LITERAL)
    report = []
    for i in range(1, params.n + 1):
        for j in (0, 1):
            for name, a, b in (
                (f"p_d[{i},{j}]", eq1.p_d[i, j], lit.p_d[i, j]),
                (f"p_0[{i},{j}]", eq1.p_0[i, j], lit.p_0[i, j]),
            ):
                d = abs(a - b)
                report.append((name, float(a), float(b), float(d), d > tol))
    for k in range(params.n + 1):
        a, b = eq1.p_0d[k], lit.p_0d[k]
        d = abs(a - b)
        report.append((f"p_0d[{k}]", float(a), float(b), float(d), d > tol))
    return report
