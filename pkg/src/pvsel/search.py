"""Model families and optimization of a criterion over them."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from .criteria import CriterionSpec, ScoredModel, score_subset, select
from .errors import ConfigError, DomainError, FeasibilityError
from .regcore import Dataset, RSSCache, Subset, full_model_t_stats
from .specfun import log_beta_upper_tail

MAX_EXHAUSTIVE_M = 25


class FamilyKind(str, enum.Enum):
    ALL_SUBSETS = "all"
    NESTED = "nested"
    GREEDY_NESTED = "greedy"


@dataclass(frozen=True)
class ModelFamily:
    kind: FamilyKind
    order: tuple[int, ...] | None = None

    @classmethod
    def parse(cls, kind: str, order: Sequence[int] | None = None) -> "ModelFamily":
        try:
            k = FamilyKind(kind)
        except ValueError:
            raise ConfigError(f"unknown family {kind!r}; use all, nested or greedy") from None
        if k is FamilyKind.NESTED and order is None:
            raise ConfigError("nested family needs an explicit --order")
        return cls(k, tuple(order) if order is not None else None)


@dataclass(frozen=True)
class SelectionResult:
    chosen: Subset
    criterion: CriterionSpec
    family: ModelFamily
    per_stratum_scores: tuple[ScoredModel, ...] | None = None


def _check_order(order: Sequence[int], M: int) -> tuple[int, ...]:
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(1, M + 1)):
        raise DomainError(f"order {order} is not a permutation of 1..{M}")
    return order


def order_by_strength(strength: Sequence[float]) -> tuple[int, ...]:
    """1-based indices by decreasing ``strength``, ties to the smaller index."""
    strength = list(strength)
    return tuple(sorted(range(1, len(strength) + 1), key=lambda i: (-strength[i - 1], i)))


def greedy_order(d: Dataset) -> tuple[int, ...]:
    """Columns sorted by decreasing squared full-model t-statistic.

    Same order as increasing drop-one p-values, since those p-values share
    one Beta(1/2, (n-M)/2) null.  Ties go to the smaller index.  When the full
    fit is exact the drop-one RSS increases are used instead.
    """
    ts = full_model_t_stats(d)
    return order_by_strength(ts.drop_increase if ts.degenerate else ts.t**2)


def drop_one_log_pvalues(d: Dataset) -> np.ndarray:
    """ln p-value of R_(f-{i})f under Beta(1/2, (n-M)/2), for each column i."""
    ts = full_model_t_stats(d)
    df = ts.residual_df
    out = np.empty(d.M)
    for i in range(d.M):
        if ts.degenerate:
            r = 1.0 if ts.drop_increase[i] > 0 else 0.0
        else:
            # R = (RSS(f-i) - RSS(f)) / RSS(f-i) = T^2 / (T^2 + n - M)
            t2 = ts.t[i] ** 2
            r = t2 / (t2 + df)
        out[i] = log_beta_upper_tail(0.5, df / 2.0, r)
    return out


def build_family(kind: FamilyKind | str, order: Sequence[int] | None, M: int) -> Iterator[Subset]:
    """Enumerate a family lazily: by cardinality, then lexicographically.

    Nested families contain the empty model followed by the prefixes of
    ``order`` (each as a sorted tuple).
    """
    kind = FamilyKind(kind)
    if kind is FamilyKind.ALL_SUBSETS:
        if M > MAX_EXHAUSTIVE_M:
            raise FeasibilityError(
                f"all-subsets search over M={M} columns exceeds the cap of "
                f"{MAX_EXHAUSTIVE_M}; use the greedy family"
            )
        cols = range(1, M + 1)
        return (c for p in range(M + 1) for c in itertools.combinations(cols, p))
    if order is None:
        raise ConfigError("nested family needs an order")
    order = _check_order(order, M)
    return (tuple(sorted(order[:k])) for k in range(M + 1))


def stratum_best(d: Dataset, cache: RSSCache) -> list[Subset]:
    """Smallest-RSS subset of every cardinality 0..M.

    Streams all subsets keeping one running best per stratum; equal RSS keeps
    the earlier (lexicographically smaller) subset.
    """
    M = d.M
    best: list[Subset] = []
    for p in range(M + 1):
        winner, winner_rss = None, math.inf
        for c in itertools.combinations(range(1, M + 1), p):
            r = cache.rss(c, memo=False)
            if r < winner_rss:
                winner, winner_rss = c, r
        cache.remember(winner, winner_rss)
        best.append(winner)
    return best


def resolve_family(d: Dataset, family: ModelFamily) -> ModelFamily:
    if family.kind is FamilyKind.GREEDY_NESTED and family.order is None:
        return replace(family, order=greedy_order(d))
    if family.kind is FamilyKind.NESTED:
        return replace(family, order=_check_order(family.order or (), d.M))
    return family


def candidates(d: Dataset, family: ModelFamily, cache: RSSCache) -> list[Subset]:
    """Subsets that need scoring: stratum winners, or the nested prefixes."""
    if d.M >= d.n:
        raise DomainError(f"model search needs M < n, got M={d.M}, n={d.n}")
    if family.kind is FamilyKind.ALL_SUBSETS:
        if d.M > MAX_EXHAUSTIVE_M:
            list(build_family(family.kind, None, d.M))  # raises FeasibilityError
        return stratum_best(d, cache)
    cache.nested_rss(family.order)
    return list(build_family(family.kind, family.order, d.M))


def select_from_candidates(
    cands: Sequence[Subset],
    family: ModelFamily,
    spec: CriterionSpec,
    cache: RSSCache,
    keep_scores: bool = False,
) -> SelectionResult:
    scored = [ScoredModel(j, score_subset(spec, j, cache)) for j in cands]
    chosen = select(scored, spec.direction)
    return SelectionResult(chosen, spec, family, tuple(scored) if keep_scores else None)


def select_over_family(
    d: Dataset,
    family: ModelFamily,
    spec: CriterionSpec,
    keep_scores: bool = False,
    cache: RSSCache | None = None,
) -> SelectionResult:
    """Optimize ``spec`` over ``family``.

    For all-subsets search each cardinality stratum is first reduced to its
    smallest-RSS member (every supported criterion is monotone in RSS within
    a stratum), so only ``M + 1`` models are scored.
    """
    cache = cache or RSSCache(d)
    family = resolve_family(d, family)
    cands = candidates(d, family, cache)
    return select_from_candidates(cands, family, spec, cache, keep_scores)


def select_many(
    d: Dataset,
    family: ModelFamily,
    specs: Sequence[CriterionSpec],
    keep_scores: bool = False,
) -> list[SelectionResult]:
    """Run several criteria sharing one family, one order and one RSS memo."""
    cache = RSSCache(d)
    family = resolve_family(d, family)
    cands = candidates(d, family, cache)
    return [select_from_candidates(cands, family, s, cache, keep_scores) for s in specs]
