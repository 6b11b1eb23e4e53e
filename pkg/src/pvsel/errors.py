"""Exception hierarchy shared across the package."""


class PvselError(Exception):
    """Base class for all package errors."""


class DomainError(PvselError, ValueError):
    """An argument lies outside the domain of a function."""


class ConfigError(PvselError, ValueError):
    """Invalid user configuration (criterion names, families, files, presets)."""


class FeasibilityError(ConfigError):
    """A requested search is too large to run exhaustively."""


class NumericalError(PvselError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy value."""


class ConvergenceError(NumericalError):
    """An iterative evaluation hit its iteration cap.

    Attributes
    ----------
    residual : float
        Size of the last update relative to one when iteration stopped.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class RankDeficiencyError(NumericalError):
    """Selected design columns are numerically rank deficient."""

    def __init__(self, subset, rank: int):
        cols = ",".join(str(i) for i in subset) or "<empty>"
        super().__init__(
            f"columns {{{cols}}} have numerical rank {rank} < {len(subset)}"
        )
        self.subset = tuple(subset)
        self.rank = rank


class DegenerateFitError(NumericalError):
    """A residual sum of squares that must be positive is zero."""
