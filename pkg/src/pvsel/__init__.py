"""Linear-regression subset selection with p-value criteria."""

from .criteria import CriterionSpec, ScoredModel, parse_criterion, select
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateFitError,
    DomainError,
    FeasibilityError,
    NumericalError,
    RankDeficiencyError,
)
from .regcore import Dataset, FitResult, fit_ols, load_dataset
from .search import FamilyKind, ModelFamily, greedy_order, select_over_family

__version__ = "0.1.0"
