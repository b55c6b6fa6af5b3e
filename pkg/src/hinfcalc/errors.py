"""Exception types shared across the package.

The CLI maps ``PreconditionError`` (and subclasses) to exit code 3 and
``NumericalFailure`` to exit code 2.
"""


class PreconditionError(ValueError):
    """Input violates a documented precondition."""


class DomainError(PreconditionError):
    """Angle or domain parameter outside its admissible range."""


class ArityError(PreconditionError):
    """Symbol called with the wrong number of variables."""


class PoleProximityError(PreconditionError):
    """Evaluation point too close to a declared pole or to the spectrum."""


class NonCommutingError(PreconditionError):
    """Operator tuple fails the commutation check."""


class BudgetExceeded(PreconditionError):
    """Requested computation exceeds the configured size or time budget."""


class NumericalFailure(RuntimeError):
    """A numerical check did not reach its tolerance."""
