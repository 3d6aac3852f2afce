"""Exception types raised by the numerical routines."""


class HdlrtError(Exception):
    """Base class for all package errors."""


class NonConvergence(HdlrtError):
    """An iterative solver exhausted its iteration budget."""


class BracketFailure(HdlrtError):
    """A root could not be bracketed inside the admissible range."""


class KappaOutOfRange(HdlrtError, ValueError):
    """Aspect ratio outside the regime where the MLE exists asymptotically."""


class SingularMatrixError(HdlrtError):
    """A Gram or Hessian matrix is not positive definite."""


class DimensionMismatch(HdlrtError, ValueError):
    pass


class EmptyInput(HdlrtError, ValueError):
    pass
