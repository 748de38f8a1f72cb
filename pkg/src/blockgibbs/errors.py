"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class ShrinkageError(Exception):
    exit_code = 1


class InvalidParameter(ShrinkageError, ValueError):
    exit_code = 2


class DimensionMismatch(InvalidParameter):
    pass


class ConstantColumn(InvalidParameter):
    def __init__(self, j):
        super().__init__(f"column {j} has zero variance")
        self.column = j


class InvalidBound(InvalidParameter):
    def __init__(self, message, d_min=None):
        super().__init__(message)
        self.d_min = d_min


class NumericalError(ShrinkageError, ArithmeticError):
    exit_code = 4


class NotPositiveDefinite(NumericalError):
    pass


class DegenerateScale(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class TooShort(NumericalError):
    pass


class ConstantSeries(NumericalError):
    pass


class ChainError(NumericalError):
    """A kernel step failed; ``iteration`` is the 0-based step index."""

    def __init__(self, iteration, cause):
        super().__init__(f"chain aborted at iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


class CsvParse(ShrinkageError):
    exit_code = 3

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
