"""Exception hierarchy shared by every module of the package."""


class LambdaFamilyError(Exception):
    """Base class for all package errors."""


class DomainError(LambdaFamilyError, ValueError):
    """A log-ratio base ``1 + lam * u.v`` (or a related denominator) is not positive."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class DimensionMismatch(LambdaFamilyError, ValueError):
    pass


class InvalidParameter(LambdaFamilyError, ValueError):
    """A parameter lies outside its admissible set (natural, dual or simplex)."""


class NoFeasiblePoint(LambdaFamilyError, ValueError):
    pass


class QuadratureFailure(LambdaFamilyError, RuntimeError):
    pass


class EmptyData(LambdaFamilyError, ValueError):
    pass


class InitializationError(LambdaFamilyError, ValueError):
    pass


class ParseError(LambdaFamilyError, ValueError):
    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class InvalidManifest(LambdaFamilyError, ValueError):
    pass
