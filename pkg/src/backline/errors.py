"""Exception hierarchy; every pipeline failure maps onto one CLI exit code."""


class BacklineError(Exception):
    exit_code = 1


class ValidationError(BacklineError):
    exit_code = 1


class CorruptInputError(ValidationError):
    pass


class MissingInputError(BacklineError):
    exit_code = 2


class NumericalError(BacklineError):
    exit_code = 3


class DegenerateGeometryError(NumericalError):
    pass


class OrientationUnknownError(ValidationError):
    pass


class CannotSyncError(ValidationError):
    pass


class InsufficientDefendersError(ValidationError):
    pass


class EmptySequenceError(ValidationError):
    pass


class DegenerateDesignError(NumericalError):
    pass


class InfeasibleConfigError(ValidationError):
    pass


class StageError(BacklineError):
    """Wraps a failure with the pipeline stage it came from."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
