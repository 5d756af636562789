"""Network parameterization: topology, powers, fading, thresholds, access probabilities."""

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BetaWarning, ParameterError


@dataclass(frozen=True)
class NetworkParams:
    """Full parameterization of the relay-assisted random-access network.

    Users are saturated sources at a common distance from the relay and the
    destination; the relay is full duplex with residual self-interference
    coefficient ``g`` (0 = perfect cancelation, 1 = no cancelation).

    Defaults follow the reference scenario used throughout the tests:
    r_d=130 m, r_0=60 m, r_0d=80 m, alpha=4, eta=1e-11 W, user power 1 mW,
    relay power 10 mW, q=0.1, q0=0.99, gamma=0.6, g=1e-8.

    ``q`` is a single symmetric transmit probability, or a pair (q1, q2)
    in the two-user case. Asymmetry is supported in transmit probabilities
    only; link geometry and powers are shared by all users.
    """

    n: int = 2
    q: float | tuple[float, float] = 0.1
    q0: float = 0.99
    r_d: float = 130.0
    r_0: float = 60.0
    r_0d: float = 80.0
    alpha: float = 4.0
    eta_0: float = 1e-11
    eta_d: float = 1e-11
    gamma_0: float = 0.6
    gamma_d: float = 0.6
    g: float = 1e-8
    p_tx_user: float = 1e-3
    p_tx_relay: float = 1e-2
    v_d: float = 1.0
    v_0: float = 1.0
    v_0d: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterError("n", f"must be an integer >= 1, got {self.n!r}")
        q = self.q
        if isinstance(q, (tuple, list)):
            if self.n != 2:
                raise ParameterError("q", "per-user pair is only supported for n = 2")
            if len(q) != 2:
                raise ParameterError("q", f"pair must have length 2, got {len(q)}")
            object.__setattr__(self, "q", (float(q[0]), float(q[1])))
            for qi in self.q:
                if not 0.0 <= qi <= 1.0:
                    raise ParameterError("q", f"probabilities must lie in [0, 1], got {qi}")
        else:
            if not 0.0 <= q <= 1.0:
                raise ParameterError("q", f"must lie in [0, 1], got {q}")
        if not 0.0 <= self.q0 <= 1.0:
            raise ParameterError("q0", f"must lie in [0, 1], got {self.q0}")
        for name in ("r_d", "r_0", "r_0d", "eta_0", "eta_d", "p_tx_user", "p_tx_relay",
                     "v_d", "v_0", "v_0d"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(name, f"must be > 0, got {getattr(self, name)}")
        if self.alpha < 2.0:
            raise ParameterError("alpha", f"must be >= 2, got {self.alpha}")
        for name in ("gamma_0", "gamma_d"):
            if getattr(self, name) < 0.0:
                raise ParameterError(name, f"must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.g <= 1.0:
            raise ParameterError("g", f"must lie in [0, 1], got {self.g}")
        if self.beta <= 1.0:
            warnings.warn(
                f"beta = {self.beta:.6g} <= 1; the symmetric closed-form success "
                "probabilities assume beta > 1",
                BetaWarning,
                stacklevel=2,
            )

    # -- derived link quantities ------------------------------------------------

    @property
    def h_d(self):
        """Received power factor of the user -> destination link (W)."""
        return self.p_tx_user * self.r_d ** -self.alpha

    @property
    def h_0(self):
        """Received power factor of the user -> relay link (W)."""
        return self.p_tx_user * self.r_0 ** -self.alpha

    @property
    def h_0d(self):
        """Received power factor of the relay -> destination link (W)."""
        return self.p_tx_relay * self.r_0d ** -self.alpha

    @property
    def beta(self):
        """Relay-over-user received power ratio at the destination."""
        return (self.v_0d * self.h_0d) / (self.v_d * self.h_d)

    @property
    def is_symmetric(self):
        """True when all users share one transmit probability."""
        if isinstance(self.q, tuple):
            return self.q[0] == self.q[1]
        return True

    @property
    def q_vec(self):
        """Per-user transmit probabilities as an array of length n."""
        if isinstance(self.q, tuple):
            return np.array(self.q, dtype=float)
        return np.full(self.n, float(self.q))

    @property
    def q_scalar(self):
        """The common transmit probability; requires a symmetric network."""
        if not self.is_symmetric:
            raise ParameterError("q", "network is not symmetric")
        return self.q[0] if isinstance(self.q, tuple) else float(self.q)

    def updated(self, **changes):
        """Return a copy with the given fields replaced (re-validated)."""
        return dataclasses.replace(self, **changes)
