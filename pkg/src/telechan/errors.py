"""Error types shared across the package.

Plain ``ValueError`` is used for bad arguments (wrong enum value, negative time,
malformed grids); the classes below mark states and computations that went bad.
"""


class InvalidStateError(ValueError):
    """A matrix fails the density-matrix gates (Hermiticity, trace, positivity)."""


class IntegrationDivergedError(RuntimeError):
    """The integrated state failed validation.

    Carries ``max_violation``, the largest of the Hermiticity defect, trace
    defect, and negative-eigenvalue excursion of the offending state.
    """

    def __init__(self, message: str, max_violation: float):
        super().__init__(f"{message} (max violation {max_violation:.3e})")
        self.max_violation = float(max_violation)


class NumericalFailureError(RuntimeError):
    """A numerical routine produced results outside its trust region."""
