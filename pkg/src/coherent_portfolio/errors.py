"""Exception and warning types raised across the package."""


class PortfolioError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PortfolioError, ValueError):
    pass


class ThetaOutOfRange(PortfolioError, ValueError):
    """Probability level outside the open interval (0, 1)."""


class InvalidScenarioSpace(PortfolioError, ValueError):
    pass


class UnsupportedDual(PortfolioError, ValueError):
    """Value-at-risk has no coherent dual density set on scenario spaces."""


class NotPositiveDefinite(PortfolioError, ValueError):
    pass


class MeanParallelToOnes(PortfolioError, ValueError):
    """Mean vector is (numerically) a multiple of the all-ones vector."""


class SigmaBelowCorner(PortfolioError, ValueError):
    """Standard deviation lies left of the corner of the Markowitz hyperbola."""


class InvalidProblem(PortfolioError, ValueError):
    pass


class EmptyFeasibleGrid(PortfolioError):
    """No grid point satisfied the risk constraint."""


class UnsupportedDimension(PortfolioError, ValueError):
    pass


class MaxIterations(PortfolioError, RuntimeError):
    """Simplex exceeded its iteration budget."""


class ParseError(PortfolioError, ValueError):
    """Malformed input file; carries the 1-based line and column."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SlaterViolated(UserWarning):
    """No strictly feasible portfolio exists; a duality gap is possible."""
