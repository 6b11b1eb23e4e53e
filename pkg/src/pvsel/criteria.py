"""Scoring of candidate subsets on the log scale.

Three criterion kinds are supported:

``MPV_MIN``
    minimal p-value criterion, minimize ``e^{p_j a_n} p(R_0j)``; the empty
    model scores ``e^{a_n} / sqrt(n)``.
``MPV_MAX``
    maximal p-value criterion, maximize ``e^{-p_j a_n} p(R_jf)``; the full
    model scores ``e^{-M a_n}``.
``PENALIZED_LL``
    maximize ``-n log(RSS(j)/n) - p_j C_n`` (AIC for ``C_n = 2``, BIC for
    ``C_n = log n``).

Scores are never exponentiated.  Ties are resolved by :func:`select`.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigError, DegenerateFitError, DomainError
from .regcore import Dataset, RSSCache, Subset, as_subset, partial_determination_rss
from .specfun import log_beta_upper_tail


class Kind(str, enum.Enum):
    MPV_MIN = "mpv_min"
    MPV_MAX = "mpv_max"
    PENALIZED_LL = "penalized_ll"


@dataclass(frozen=True)
class Schedule:
    """Map a sample size to a penalty constant.

    ``rule`` is ``"const"`` (use ``value``), ``"halflog"`` (log(n)/2),
    ``"log"`` (log n) or ``"table"`` (look ``n`` up in ``table``).
    """

    rule: str
    value: float | None = None
    table: tuple[tuple[int, float], ...] = ()

    def __call__(self, n: int) -> float:
        if self.rule == "const":
            return float(self.value)
        if self.rule == "halflog":
            return math.log(n) / 2.0
        if self.rule == "log":
            return math.log(n)
        if self.rule == "table":
            lookup = dict(self.table)
            if n not in lookup:
                raise ConfigError(f"penalty table has no entry for n={n}")
            return lookup[n]
        raise ConfigError(f"unknown penalty rule {self.rule!r}")


@dataclass(frozen=True)
class CriterionSpec:
    name: str
    kind: Kind
    schedule: Schedule

    @property
    def direction(self) -> str:
        return "min" if self.kind is Kind.MPV_MIN else "max"

    def penalty(self, n: int) -> float:
        value = self.schedule(n)
        if self.kind is Kind.PENALIZED_LL:
            if not value > 0:
                raise ConfigError(f"{self.name}: C_n must be positive, got {value}")
        elif not value >= 0:
            raise ConfigError(f"{self.name}: a_n must be nonnegative, got {value}")
        return value


_PARAM = re.compile(r"^(mpvc|mpvc-max|pll):([ac])=(.+)$")


def parse_criterion(name: str) -> CriterionSpec:
    """Build a criterion from its CLI/config name.

    Accepted: ``mpvc`` (a_n = 0), ``mpvccal`` and ``mpvc-max-cal``
    (a_n = log(n)/2), ``aic``, ``bic``, and the parameterized forms
    ``mpvc:a=<c>``, ``mpvc-max:a=<c>``, ``pll:c=<c>``.
    """
    key = name.strip().lower()
    fixed = {
        "mpvc": (Kind.MPV_MIN, Schedule("const", 0.0)),
        "mpvccal": (Kind.MPV_MIN, Schedule("halflog")),
        "mpvc-max-cal": (Kind.MPV_MAX, Schedule("halflog")),
        "aic": (Kind.PENALIZED_LL, Schedule("const", 2.0)),
        "bic": (Kind.PENALIZED_LL, Schedule("log")),
    }
    if key in fixed:
        kind, sched = fixed[key]
        return CriterionSpec(key, kind, sched)
    m = _PARAM.match(key)
    if m is None:
        raise ConfigError(f"unknown criterion {name!r}")
    family, letter, raw = m.groups()
    if (family == "pll") != (letter == "c"):
        raise ConfigError(f"criterion {name!r}: use a=<c> for mpvc forms and c=<c> for pll")
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"criterion {name!r}: {raw!r} is not a number") from None
    kind = {"mpvc": Kind.MPV_MIN, "mpvc-max": Kind.MPV_MAX, "pll": Kind.PENALIZED_LL}[family]
    spec = CriterionSpec(key, kind, Schedule("const", value))
    spec.penalty(1)  # sign check
    return spec


def criterion_from_table(name: str, kind: Kind, table: Mapping[int, float]) -> CriterionSpec:
    """Criterion whose penalty is given per sample size."""
    sched = Schedule("table", table=tuple(sorted((int(k), float(v)) for k, v in table.items())))
    return CriterionSpec(name, kind, sched)


def parse_criteria(names: str | Iterable[str]) -> list[CriterionSpec]:
    if isinstance(names, str):
        names = [s for s in names.split(",") if s.strip()]
    specs = [parse_criterion(s) for s in names]
    if not specs:
        raise ConfigError("no criteria given")
    return specs


# --------------------------------------------------------------------------
# Scores from residual sums of squares
# --------------------------------------------------------------------------


def mpvc_from_rss(rss_empty: float, rss_j: float, p_j: int, n: int, a_n: float) -> float:
    if p_j == 0:
        return a_n - 0.5 * math.log(n)
    if p_j >= n:
        raise DomainError(f"model of size {p_j} needs n > {p_j}")
    if rss_empty <= 0:
        raise DegenerateFitError("response is identically zero: RSS of the empty model is 0")
    r = partial_determination_rss(rss_empty, rss_j)
    return p_j * a_n + log_beta_upper_tail(p_j / 2.0, (n - p_j) / 2.0, r)


def mpvc_max_from_rss(rss_j: float, rss_full: float, p_j: int, M: int, n: int, a_n: float) -> float:
    if M >= n:
        raise DomainError(f"maximal p-value criterion needs M < n, got M={M}, n={n}")
    if p_j == M:
        return -M * a_n
    # RSS(j) = 0 forces RSS(f) = 0: no improvement, R_jf = 0
    r = partial_determination_rss(rss_j, rss_full) if rss_j > 0 else 0.0
    return -p_j * a_n + log_beta_upper_tail((M - p_j) / 2.0, (n - M) / 2.0, r)


def penalized_from_rss(rss_j: float, p_j: int, n: int, c_n: float) -> float:
    """``-n log(RSS/n) - p C_n``; ``+inf`` flags an exact fit."""
    if p_j >= n:
        raise DomainError(f"model of size {p_j} needs n > {p_j}")
    if rss_j <= 0:
        return math.inf
    return -n * math.log(rss_j / n) - p_j * c_n


def score_subset(spec: CriterionSpec, j: Subset, cache: RSSCache) -> float:
    """Log-score of subset ``j`` under ``spec`` using memoized RSS values."""
    d = cache.d
    n, M = d.n, d.M
    pen = spec.penalty(n)
    if spec.kind is Kind.MPV_MIN:
        return mpvc_from_rss(cache.rss(()), cache.rss(j), len(j), n, pen)
    if spec.kind is Kind.MPV_MAX:
        return mpvc_max_from_rss(cache.rss(j), cache.rss(d.full), len(j), M, n, pen)
    return penalized_from_rss(cache.rss(j), len(j), n, pen)


def log_score_mpvc(d: Dataset, j: Sequence[int], a_n: float, cache: RSSCache | None = None) -> float:
    cache = cache or RSSCache(d)
    j = as_subset(j, d.M)
    return mpvc_from_rss(cache.rss(()), cache.rss(j), len(j), d.n, a_n)


def log_score_mpvc_max(d: Dataset, j: Sequence[int], a_n: float, cache: RSSCache | None = None) -> float:
    cache = cache or RSSCache(d)
    j = as_subset(j, d.M)
    return mpvc_max_from_rss(cache.rss(j), cache.rss(d.full), len(j), d.M, d.n, a_n)


def log_score_penalized(d: Dataset, j: Sequence[int], c_n: float, cache: RSSCache | None = None) -> float:
    cache = cache or RSSCache(d)
    j = as_subset(j, d.M)
    return penalized_from_rss(cache.rss(j), len(j), d.n, c_n)


# --------------------------------------------------------------------------
# Selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoredModel:
    subset: Subset
    log_score: float

    @property
    def cardinality(self) -> int:
        return len(self.subset)


def _rank_key(direction: str) -> Callable[[ScoredModel], tuple]:
    if direction == "min":
        return lambda s: (s.log_score, s.cardinality, s.subset)
    if direction == "max":
        return lambda s: (-s.log_score, s.cardinality, s.subset)
    raise ConfigError(f"direction must be 'min' or 'max', got {direction!r}")


def select(scored: Sequence[ScoredModel], direction: str) -> Subset:
    """Optimizer of the scores with the tie rule.

    Exact score ties go to the smaller model, then to the lexicographically
    smaller index tuple.
    """
    if not scored:
        raise ConfigError("cannot select from an empty candidate list")
    return min(scored, key=_rank_key(direction)).subset
