"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """A numeric input is outside its allowed domain.

    Carries the offending field name in ``field`` so callers (CLI, config
    parser) can point at the bad key.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ContractError(ValueError):
    """An operation was called in a way that violates its precondition."""


class ModelError(ValueError):
    """The requested closed form does not apply to this network shape."""


class EnumerationLimitError(RuntimeError):
    """Exact event-space enumeration would be too large for this n."""


class TruncationError(RuntimeError):
    """The truncated chain still carries too much tail mass."""

    def __init__(self, truncation, tail_mass, tol):
        self.truncation = truncation
        self.tail_mass = tail_mass
        super().__init__(
            f"tail mass {tail_mass:.3e} >= {tol:.1e} at truncation {truncation}; "
            "increase the truncation level"
        )


class UnstableQueueError(RuntimeError):
    """The relay queue drift is non-negative, so steady-state formulas do not hold.

    Carries the drift data and, when known, the minimum stabilizing relay
    transmit probability.
    """

    def __init__(self, lambda1, drift_margin, q0_min=None):
        self.lambda1 = lambda1
        self.drift_margin = drift_margin  # mu - lambda1, <= 0 here
        self.q0_min = q0_min
        extra = "" if q0_min is None else f" (q0_min = {q0_min:.6g})"
        super().__init__(
            f"relay queue unstable: drift margin mu - lambda1 = {drift_margin:.6g}{extra}"
        )


class BetaWarning(UserWarning):
    """Relay-to-destination advantage ratio beta is not > 1."""


class QueueFormWarning(UserWarning):
    """A printed closed form returned a value outside its expected range."""
