"""Exception and warning taxonomy shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input (wrong shape, bad file, bad field)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class NonConvergenceError(RuntimeError):
    """An iterative routine exhausted its budget without meeting its target."""


class LebesguePointFailureError(NonConvergenceError):
    """A one-sided Lebesgue-point estimate did not stabilize."""


class InconsistencyError(ValueError):
    """Inputs that make the requested quantity ill defined (for example
    asking for an integer index when 0 is a breakpoint of the ssf)."""


class InvariantViolationError(RuntimeError):
    """A quantity that must be constant over segments came out non-constant."""


class IdentityViolationError(RuntimeError):
    """The five-way flow/index identity chain failed to agree."""


class DegeneratePathError(RuntimeError):
    """Partition refinement hit its floor with a persistent spectral gap
    crossing (an eigenvalue sits at 0 over an interval)."""


class PairNotFredholmError(ValueError):
    """Projection pair with ||P - Q|| >= 1."""


class TruncationArtifactError(ValueError):
    """Requested window leaves the trustworthy central part of a truncated
    spectral band."""


class PrecisionLossWarning(UserWarning):
    """Evaluation point inside the guard band of a spectral breakpoint."""


class BoundaryDegeneracyWarning(UserWarning):
    """An endpoint operator has an eigenvalue within tolerance of 0."""


class IllSeparatedKernelWarning(UserWarning):
    """Singular values near the rank threshold are separated by less than
    a factor of 10, so kernel dimensions are fragile."""


class NonFredholmWarning(UserWarning):
    """An endpoint operator is singular, so index-type quantities are only
    defined through regularized limits."""


class FiniteIntervalArtifactWarning(UserWarning):
    """Semigroup time beyond the trust horizon of the finite time interval."""


class EndpointCollisionWarning(UserWarning):
    """A spectral-averaging quadrature node produced an eigenvalue within
    tolerance of the interval boundary."""
