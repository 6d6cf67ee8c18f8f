"""Exception hierarchy shared by every latmix module."""


class LatmixError(Exception):
    pass


class InvalidArgumentError(LatmixError, ValueError):
    """Bad parameter value or shape (CLI exit code 2)."""


class PreconditionError(LatmixError, ValueError):
    """Input is well-formed but outside the frame an operation is defined for."""


class ResourceLimitError(LatmixError):
    """Problem too large for an exhaustive or dense computation (CLI exit code 3)."""


class NumericalDegeneracyError(LatmixError, ArithmeticError):
    pass
