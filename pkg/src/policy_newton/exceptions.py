"""Exception types raised across the package."""


class PolicyNewtonError(Exception):
    """Base class for all package errors."""


class InvalidInput(PolicyNewtonError, ValueError):
    """An argument is outside its documented domain."""


class InvalidCount(InvalidInput):
    """A batch size or sample count is zero or exceeds what is available."""


class InvalidProbeCount(InvalidInput):
    pass


class CapExceeded(PolicyNewtonError, ValueError):
    """The trajectory space is too large to enumerate under the configured cap."""


class NotSymmetric(PolicyNewtonError, ValueError):
    pass


class NumericalFailure(PolicyNewtonError, ArithmeticError):
    """A solver could not reach its residual tolerance."""


class MaxIterExceeded(PolicyNewtonError, RuntimeError):
    """An iterative solver hit its iteration cap before its stopping test fired."""


class DenseHessianForbidden(PolicyNewtonError, RuntimeError):
    """A dense d-by-d Hessian was requested inside a matrix-free code path."""
