"""Seeded generation of designs and responses for the simulation scenarios.

Every replication draws from its own Philox stream keyed by the master seed
and a tuple of integers, so data never depend on execution order or on how
replications are spread across workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, DomainError
from .regcore import Subset, as_subset


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` (e.g. ``(n, rep)``) under ``master_seed``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


class DesignKind(str, enum.Enum):
    GAUSS_AR = "gauss_ar"
    LEGENDRE = "legendre"
    FIXED = "fixed"


@dataclass(frozen=True)
class DesignSpec:
    kind: DesignKind
    M: int
    rho: float = 0.5
    marginal_variance: float = 1.0
    fixed_matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError(f"design needs M >= 1, got {self.M}")
        if self.kind is DesignKind.GAUSS_AR:
            if not abs(self.rho) < 1:
                raise ConfigError(f"rho must lie in (-1, 1), got {self.rho}")
            if not self.marginal_variance > 0:
                raise ConfigError(f"marginal variance must be positive, got {self.marginal_variance}")
        if self.kind is DesignKind.FIXED:
            if self.fixed_matrix is None or np.ndim(self.fixed_matrix) != 2:
                raise ConfigError("fixed design needs a 2-d matrix")
            if np.shape(self.fixed_matrix)[1] != self.M:
                raise ConfigError("fixed design width does not match M")

    def generate(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind is DesignKind.GAUSS_AR:
            return gen_gauss_ar(n, self.M, self.rho, self.marginal_variance, rng)
        if self.kind is DesignKind.LEGENDRE:
            return gen_legendre(n, self.M, rng)
        X = np.asarray(self.fixed_matrix, dtype=float)
        if X.shape[0] != n:
            raise ConfigError(f"fixed design has {X.shape[0]} rows, requested n={n}")
        return X


@dataclass(frozen=True)
class TrueModel:
    """Support ``t`` (1-based), coefficients in the order of ``t`` and noise variance."""

    t: Subset
    beta: tuple[float, ...]
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "t", as_subset(self.t))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != len(self.t):
            raise ConfigError(f"beta has {len(self.beta)} entries for {len(self.t)} true columns")
        if not self.sigma2 >= 0:
            raise ConfigError(f"noise variance must be nonnegative, got {self.sigma2}")

    def full_beta(self, M: int) -> np.ndarray:
        out = np.zeros(M)
        for i, b in zip(self.t, self.beta):
            out[i - 1] = b
        return out


def ar_covariance(M: int, rho: float, variance: float = 1.0) -> np.ndarray:
    return variance * scipy.linalg.toeplitz(rho ** np.arange(M))


def ar_sqrt(M: int, rho: float, variance: float = 1.0) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L' = variance * rho^|i-j|``."""
    return np.linalg.cholesky(ar_covariance(M, rho, variance))


def gen_gauss_ar(n: int, M: int, rho: float, variance: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` iid rows from N(0, variance * rho^|i-j|)."""
    if n < 1 or M < 1:
        raise DomainError(f"need n, M >= 1, got n={n}, M={M}")
    z = rng.standard_normal((n, M))
    return z @ ar_sqrt(M, rho, variance).T


def legendre_columns(u: np.ndarray, M: int) -> np.ndarray:
    """``sqrt(2k+1) P_k(u)`` for k = 1..M, orthonormal under Uniform[-1, 1].

    Built with the three-term recurrence
    ``(k+1) P_{k+1} = (2k+1) u P_k - k P_{k-1}``.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty((u.size, M))
    prev, cur = np.ones_like(u), u.copy()
    for k in range(1, M + 1):
        out[:, k - 1] = math.sqrt(2 * k + 1) * cur
        prev, cur = cur, ((2 * k + 1) * u * cur - k * prev) / (k + 1)
    return out


def gen_legendre(n: int, M: int, rng: np.random.Generator) -> np.ndarray:
    if M < 1:
        raise DomainError(f"need M >= 1, got {M}")
    u = rng.uniform(-1.0, 1.0, size=n)
    return legendre_columns(u, M)


def gen_response(design: np.ndarray, true_model: TrueModel, rng: np.random.Generator) -> np.ndarray:
    """``X_t beta + sigma z`` with ``z`` iid standard normal."""
    X = np.asarray(design, dtype=float)
    t = true_model.t
    if t and t[-1] > X.shape[1]:
        raise ConfigError(f"true column {t[-1]} outside a design with {X.shape[1]} columns")
    mean = X[:, [i - 1 for i in t]] @ np.asarray(true_model.beta) if t else np.zeros(X.shape[0])
    z = rng.standard_normal(X.shape[0])
    return mean + math.sqrt(true_model.sigma2) * z
