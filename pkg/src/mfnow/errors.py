"""Exception hierarchy.

Two families map onto CLI exit codes: :class:`ValidationError` (bad input,
exit 1) and :class:`ComputationError` (numerics could not proceed, exit 2).
"""


class MfnowError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(MfnowError):
    pass


class ComputationError(MfnowError):
    pass


class FormatError(ValidationError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class FrequencyMismatch(ValidationError):
    pass


class EmptySeries(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class InvalidQuantiles(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class MissingObservation(ComputationError):
    pass


class InsufficientData(ComputationError):
    pass


class InsufficientHistory(ComputationError):
    def __init__(self, message, shortfall=None, dropped=None):
        self.shortfall = shortfall
        self.dropped = list(dropped) if dropped is not None else []
        super().__init__(message)


class DivisionByZero(ComputationError, ZeroDivisionError):
    def __init__(self, message, where=None):
        self.where = where
        super().__init__(message)


class DegenerateVariance(ComputationError):
    pass


class ExactCollinearity(ComputationError):
    def __init__(self, message, column=None):
        self.column = column
        super().__init__(message)


class RankDeficient(ComputationError):
    pass


class ParameterOverflow(ComputationError):
    pass


class FitFailed(ComputationError):
    def __init__(self, message, causes=None):
        self.causes = list(causes or [])
        super().__init__(message)


class DegenerateReference(ComputationError):
    pass
