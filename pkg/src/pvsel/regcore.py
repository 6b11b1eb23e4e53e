"""Least-squares fits of column subsets and the statistics built on them.

Subsets are tuples of 1-based column indices in increasing order; ``()`` is
the empty model ``Y = eps`` (no implicit intercept, an intercept has to be
an explicit column).  All fits go through orthogonal factorizations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, DegenerateFitError, DomainError, RankDeficiencyError

RANK_RTOL = 1e-10
# RSS below this fraction of ||Y||^2 is round-off from an exact fit
ZERO_RSS_RTOL = 1e-20

Subset = tuple[int, ...]


@dataclass(frozen=True)
class Dataset:
    """An ``n x M`` design with an ``n``-vector response."""

    design: np.ndarray
    response: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if y.ndim != 1 or y.size < 1:
            raise DomainError("response must be a non-empty vector")
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(y.size, 0)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DomainError(
                f"design has shape {X.shape}, expected ({y.size}, M)"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("dataset contains non-finite entries")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.response.size

    @property
    def M(self) -> int:
        return self.design.shape[1]

    @property
    def full(self) -> Subset:
        return tuple(range(1, self.M + 1))

    def columns(self, subset: Subset) -> np.ndarray:
        return self.design[:, [i - 1 for i in subset]]


def as_subset(indices: Iterable[int], M: int | None = None) -> Subset:
    """Validate and normalize column indices into a sorted tuple."""
    idx = tuple(sorted(int(i) for i in indices))
    if len(set(idx)) != len(idx):
        raise DomainError(f"duplicate indices in subset {idx}")
    if idx and idx[0] < 1:
        raise DomainError(f"indices are 1-based, got {idx}")
    if M is not None and idx and idx[-1] > M:
        raise DomainError(f"index {idx[-1]} exceeds number of columns {M}")
    return idx


@dataclass(frozen=True)
class FitResult:
    subset: Subset
    coefficients: np.ndarray
    rss: float
    residual_df: int

    def embedded(self, M: int) -> np.ndarray:
        """Coefficients as a length-``M`` vector, zeros off the subset."""
        beta = np.zeros(M)
        beta[[i - 1 for i in self.subset]] = self.coefficients
        return beta


def _snap_rss(rss: float, yy: float) -> float:
    return 0.0 if rss <= ZERO_RSS_RTOL * yy else rss


def fit_ols(d: Dataset, j: Sequence[int]) -> FitResult:
    """OLS fit of the response on the columns in ``j`` (pivoted QR)."""
    j = as_subset(j, d.M)
    y = d.response
    yy = float(y @ y)
    p = len(j)
    if p == 0:
        return FitResult(j, np.zeros(0), yy, d.n)
    if p >= d.n:
        raise DomainError(f"subset of size {p} needs more than n={d.n} observations")
    X = d.columns(j)
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag[0] > 0 else 0
    if rank < p:
        raise RankDeficiencyError(j, rank)
    qty = Q.T @ y
    coef = np.empty(p)
    coef[piv] = scipy.linalg.solve_triangular(R, qty)
    resid = y - X @ coef
    rss = _snap_rss(float(resid @ resid), yy)
    return FitResult(j, coef, rss, d.n - p)


class RSSCache:
    """Memoized RSS per subset for one selection run.

    Large searches compress the problem once with a QR of the full design:
    for any subset ``j``, ``RSS(j) = RSS(f) + min_b ||Q'y - R_j b||^2``, an
    ``M``-row problem instead of an ``n``-row one.  Not shared between runs.
    """

    def __init__(self, d: Dataset):
        self.d = d
        self._yy = float(d.response @ d.response)
        self._memo: dict[Subset, float] = {(): self._yy}
        self._compressed = None

    def _compress(self):
        d = self.d
        if d.M >= d.n:
            raise DomainError(f"full model needs M < n, got M={d.M}, n={d.n}")
        Q, R = np.linalg.qr(d.design, mode="reduced")
        qty = Q.T @ d.response
        resid = d.response - Q @ qty
        rss_full = float(resid @ resid)
        self._compressed = (R, qty, rss_full)

    def remember(self, j: Subset, value: float) -> None:
        self._memo.setdefault(j, value)

    def rss(self, j: Subset, memo: bool = True) -> float:
        hit = self._memo.get(j)
        if hit is not None:
            return hit
        if self._compressed is None and self.d.M < self.d.n:
            self._compress()
        if self._compressed is None:
            value = fit_ols(self.d, j).rss
        else:
            value = self._compressed_rss(j)
        if memo:
            self._memo[j] = value
        return value

    def _compressed_rss(self, j: Subset) -> float:
        R, qty, rss_full = self._compressed
        cols = R[:, [i - 1 for i in j]]
        Qj, Rj, _ = scipy.linalg.qr(cols, mode="economic", pivoting=True)
        diag = np.abs(np.diag(Rj))
        rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag[0] > 0 else 0
        if rank < len(j):
            raise RankDeficiencyError(j, rank)
        r = qty - Qj @ (Qj.T @ qty)
        return _snap_rss(rss_full + float(r @ r), self._yy)

    def nested_rss(self, order: Sequence[int]) -> list[float]:
        """RSS of the empty model and of every prefix of ``order``.

        One unpivoted QR of the reordered design gives all prefix fits.
        """
        d = self.d
        order = list(order)
        if not order:
            return [self._yy]
        if len(order) >= d.n:
            raise DomainError(f"nested family needs fewer than n={d.n} columns")
        X = d.design[:, [i - 1 for i in order]]
        Q, R = np.linalg.qr(X, mode="reduced")
        diag = np.abs(np.diag(R))
        scale = np.linalg.norm(X, axis=0).max()
        for k in range(len(order)):
            if not diag[k] > RANK_RTOL * scale:
                raise RankDeficiencyError(tuple(sorted(order[: k + 1])), k)
        qty = Q.T @ d.response
        resid = d.response - Q @ qty
        tail = float(resid @ resid)
        # RSS(prefix k) = RSS(full prefix) + sum of squared later coordinates
        later = np.concatenate([np.cumsum((qty**2)[::-1])[::-1], [0.0]])
        out = []
        for k in range(len(order) + 1):
            key = tuple(sorted(order[:k]))
            value = _snap_rss(tail + float(later[k]), self._yy) if k else self._yy
            self._memo.setdefault(key, value)
            out.append(self._memo[key])
        return out


def partial_determination_rss(rss_j: float, rss_k: float) -> float:
    """R_jk = (RSS(j) - RSS(k)) / RSS(j) for nested ``j`` within ``k``."""
    if rss_j <= 0:
        raise DegenerateFitError("partial determination undefined: RSS(j) = 0")
    r = (rss_j - rss_k) / rss_j
    return min(max(r, 0.0), 1.0)


def partial_determination(d: Dataset, j: Sequence[int], k: Sequence[int]) -> float:
    """R_jk computed from fresh fits of ``j`` and ``k``."""
    j, k = as_subset(j, d.M), as_subset(k, d.M)
    if not set(j) <= set(k):
        raise DomainError(f"{j} is not nested in {k}")
    return partial_determination_rss(fit_ols(d, j).rss, fit_ols(d, k).rss)


@dataclass(frozen=True)
class LRT:
    """Likelihood ratio statistic; ``saturated`` when RSS(k) = 0."""

    value: float
    saturated: bool = False


LRT_CAP = float(np.finfo(float).max)


def lrt_statistic(d: Dataset, j: Sequence[int], k: Sequence[int]) -> LRT:
    """D_jk = -n ln(RSS(k) / RSS(j)) = -n ln(1 - R_jk)."""
    j, k = as_subset(j, d.M), as_subset(k, d.M)
    if not set(j) <= set(k):
        raise DomainError(f"{j} is not nested in {k}")
    rss_j, rss_k = fit_ols(d, j).rss, fit_ols(d, k).rss
    if rss_j <= 0:
        raise DegenerateFitError("LRT undefined: RSS(j) = 0")
    if rss_k <= 0:
        return LRT(LRT_CAP, saturated=True)
    return LRT(max(-d.n * math.log(rss_k / rss_j), 0.0))


@dataclass(frozen=True)
class TStats:
    """Full-model t-statistics.

    ``drop_increase[i]`` is RSS(f - {i}) - RSS(f), which stays informative
    when the full fit is exact and the t-statistics are set to zero.
    """

    t: np.ndarray
    rss_full: float
    drop_increase: np.ndarray
    residual_df: int
    degenerate: bool = False


def full_model_t_stats(d: Dataset) -> TStats:
    n, M = d.n, d.M
    if M >= n:
        raise DomainError(f"t-statistics need M < n, got M={M}, n={n}")
    X = d.design
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag[0] > 0 else 0
    if rank < M:
        raise RankDeficiencyError(d.full, rank)
    qty = Q.T @ d.response
    coef = np.empty(M)
    coef[piv] = scipy.linalg.solve_triangular(R, qty)
    resid = d.response - X @ coef
    rss = _snap_rss(float(resid @ resid), float(d.response @ d.response))
    # diag of (X'X)^{-1} = row norms^2 of R^{-1}, mapped back through the pivot
    Rinv = scipy.linalg.solve_triangular(R, np.eye(M))
    gram_inv_diag = np.empty(M)
    gram_inv_diag[piv] = np.sum(Rinv**2, axis=1)
    increase = coef**2 / gram_inv_diag
    df = n - M
    if rss <= 0:
        return TStats(np.zeros(M), 0.0, increase, df, degenerate=True)
    sigma = math.sqrt(rss / df)
    t = coef / (sigma * np.sqrt(gram_inv_diag))
    return TStats(t, rss, increase, df)


# --------------------------------------------------------------------------
# Delimited text ingestion
# --------------------------------------------------------------------------


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_dataset(
    path: str | Path,
    response: str | int,
    delimiter: str | None = None,
    header: bool | None = None,
) -> Dataset:
    """Read a delimiter-separated file into a :class:`Dataset`.

    ``response`` is a column name (needs a header) or a 1-based column
    number.  The remaining columns become regressors in file order.  When
    ``header`` is None it is detected from whether the first row is numeric;
    when ``delimiter`` is None it is sniffed from comma, tab, semicolon and
    whitespace.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError(f"dataset {path} is empty")
    if delimiter is None:
        first = lines[0]
        delimiter = next((c for c in ",\t;" if c in first), None)
    if delimiter is None:
        rows = [ln.split() for ln in lines]
    else:
        rows = [[c.strip() for c in r] for r in csv.reader(lines, delimiter=delimiter)]
    if header is None:
        header = not all(_is_number(c) for c in rows[0])
    names = rows[0] if header else [f"x{i}" for i in range(1, len(rows[0]) + 1)]
    body = rows[1:] if header else rows
    width = len(names)
    for lineno, r in enumerate(body, start=2 if header else 1):
        if len(r) != width:
            raise ConfigError(f"{path}: row {lineno} has {len(r)} fields, expected {width}")
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric value ({exc})") from exc
    if isinstance(response, str) and not response.isdigit():
        if response not in names:
            raise ConfigError(f"{path}: no column named {response!r}; columns are {names}")
        col = names.index(response)
    else:
        col = int(response) - 1
        if not 0 <= col < width:
            raise ConfigError(f"{path}: response column {response} out of range 1..{width}")
    keep = [i for i in range(width) if i != col]
    data = data.reshape(len(body), width)
    return Dataset(data[:, keep], data[:, col], tuple(names[i] for i in keep))
