"""Exception taxonomy shared across the package.

ValidationError covers bad user input (malformed domain specs, out-of-range
parameters); SolverError covers numerical failures (no interior cells,
iteration caps, non-convergence).  The CLI maps them to exit codes 2 and 3.
"""


class TorsionlabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(TorsionlabError):
    """Inputs violate a documented precondition or schema."""


class SolverError(TorsionlabError):
    """A numerical routine failed to produce a trustworthy result."""


class MaskMismatchError(ValidationError):
    """A test field does not vanish outside the reference mask."""
