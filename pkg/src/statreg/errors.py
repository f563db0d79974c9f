"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for usage problems, 3 for data problems, 4 for numerical failures.
"""


class StatRegError(Exception):
    exit_code = 4


class DataError(StatRegError):
    exit_code = 3


class NumericalError(StatRegError):
    exit_code = 4


class UsageError(StatRegError):
    exit_code = 2


class DimensionMismatch(DataError):
    pass


class InvalidData(DataError):
    pass


class RankDeficient(NumericalError):
    pass


class NotSymmetric(NumericalError):
    pass


class LagOutOfRange(UsageError):
    pass


class NoPositiveEigenvalue(NumericalError):
    pass


class DegenerateVariance(NumericalError):
    pass


class BlockTooSmall(UsageError):
    pass


class InvalidOrder(UsageError):
    pass


class InvalidLevel(UsageError):
    pass


class RankDeficientContrast(NumericalError):
    pass


class InvalidKernel(UsageError):
    pass


class ParseError(UsageError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownColumn(DataError):
    pass


class EmptyAfterFiltering(DataError):
    pass


class ConfigError(UsageError):
    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class FileNotFound(DataError, FileNotFoundError):
    pass


class NotCausal(UsageError, ValueError):
    pass
