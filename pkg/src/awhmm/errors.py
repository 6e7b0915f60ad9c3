"""Exception hierarchy shared by all awhmm modules.

Every error carries a short machine-readable ``code`` so the CLI can emit
single-line parseable failures.
"""


class AwhmmError(Exception):
    code = "error"


class InvalidInputError(AwhmmError):
    """An argument violates a documented precondition."""

    code = "invalid-input"


class DegenerateDensityError(AwhmmError):
    """A density evaluation was requested for a singular covariance."""

    code = "degenerate-density"


class DegenerateDataError(AwhmmError):
    """Observations carry no usable variation (e.g. all rows identical)."""

    code = "degenerate-data"


class NonConvergenceError(AwhmmError):
    """An iterative solver hit its iteration cap before its tolerance."""

    code = "non-convergence"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InfeasibleError(AwhmmError):
    """The requested marginals cannot be met by any rescaling."""

    code = "infeasible"
