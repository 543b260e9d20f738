"""Exception hierarchy.

``ConfigError`` and ``UsageError`` map to CLI exit code 1, everything else
derived from ``DataError`` maps to exit code 2.
"""


class MdGestureError(Exception):
    pass


class ConfigError(MdGestureError):
    pass


class DataError(MdGestureError):
    pass


class FormatError(DataError):
    pass


class SignalTooShort(DataError):
    pass


class RecordingTooShort(DataError):
    pass


class BadConfig(ConfigError):
    pass


class AlreadyCentered(DataError):
    pass


class WrongLayout(DataError):
    pass


class BadLength(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptySet(DataError):
    pass


class EmptyTraining(DataError):
    pass


class SingleClass(DataError):
    pass


class TooFewPoints(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class BadDim(DataError):
    pass


class DegenerateRank(DataError):
    pass


class DimMismatch(DataError):
    pass


class BadSparsity(DataError):
    pass


class GridTooLarge(DataError):
    pass


class NoClasses(DataError):
    pass


class AliasRisk(DataError):
    pass
