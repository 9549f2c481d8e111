"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A physical parameter or config field violates its constraints."""


class UnstableSimulationError(RuntimeError):
    """A simulated state left the diagnostic bound (bad parameters, not physics)."""


class InfeasibleScheduleError(RuntimeError):
    """A gait schedule fails the anchoring inequalities in strict mode."""


class MatrixExponentialOverflowError(OverflowError):
    """The matrix norm exceeds what the scaling depth can represent."""
