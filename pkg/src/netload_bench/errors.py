"""Exception hierarchy. The CLI maps each family onto a stable exit code."""


class NetloadError(Exception):
    exit_code = 1


class ConfigError(NetloadError):
    exit_code = 1


class DataError(NetloadError):
    exit_code = 2


class SchemaMismatch(DataError):
    pass


class EmptySeries(DataError):
    pass


class EmptyInput(DataError):
    pass


class TimestampMismatch(DataError):
    pass


class MissingWeatherColumn(DataError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class UnknownColumn(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidTarget(DataError, ValueError):
    pass


class TrainingError(NetloadError):
    exit_code = 3


class EmptyTrainSet(TrainingError):
    pass


class DivergenceDetected(TrainingError):
    pass


class InvalidHyperparameter(TrainingError, ValueError):
    pass


class EvaluationError(NetloadError):
    exit_code = 4


class AllPointsExcluded(EvaluationError):
    pass


class LengthMismatch(EvaluationError, ValueError):
    pass


class ZeroDenominator(EvaluationError, ZeroDivisionError):
    pass


class DegenerateStats(EvaluationError, ValueError):
    pass
