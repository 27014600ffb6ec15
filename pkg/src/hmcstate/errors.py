"""Exception types raised across the package."""


class HmcStateError(Exception):
    """Base class for all package errors."""


class BadDimension(HmcStateError, ValueError):
    """Angle vector length does not match d**2 - 1 (or the requested space)."""


class NonHermitianInput(HmcStateError, ValueError):
    pass


class SingularMap(HmcStateError, ArithmeticError):
    """Finite-difference Jacobian determinant vanished."""


class NonFiniteForce(HmcStateError, ArithmeticError):
    pass


class BadInitialPoint(HmcStateError, ValueError):
    """Chain started where the target log-density is -inf."""


class ConstraintViolation(HmcStateError, ValueError):
    pass


class NotPhysical(HmcStateError, ValueError):
    """No value of the unmeasured correlation makes the state positive."""


class MalformedFile(HmcStateError, ValueError):
    """Input file does not follow the expected column layout."""
