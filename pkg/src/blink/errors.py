"""Exception hierarchy. ``exit_code`` is what the CLI returns when one escapes."""


class BlinkError(Exception):
    exit_code = 3


class ValidationError(BlinkError):
    exit_code = 2


class DataError(BlinkError):
    exit_code = 3


class BoundsError(BlinkError):
    exit_code = 4


# logmodel
class MalformedLog(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InconsistentLog(DataError):
    pass


# sampler
class InvalidScale(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class ThresholdInvalid(ValidationError):
    pass


# predictor
class DegenerateInput(DataError):
    pass


class ZeroActual(DataError):
    pass


# selector
class InvalidProfile(ValidationError):
    pass


class ModelMissing(DataError):
    pass


class Unbounded(BoundsError):
    pass


class InfeasibleAtAnyScale(BoundsError):
    pass


# simulator / workloadgen
class CyclicDag(ValidationError):
    pass


class EmptyWorkload(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass
