"""Oracle sweeps behind ``pvsel check-specfun``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import specfun


@dataclass
class CheckResult:
    name: str
    checked: int
    failures: list[str]
    detail: str

    @property
    def ok(self) -> bool:
        return not self.failures


def quad_cdf(a: float, b: float, x: float) -> float:
    """Beta(a, b) CDF by adaptive quadrature of the density (smaller side)."""
    lb = specfun.log_beta(a, b)

    def dens(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return math.exp((a - 1) * math.log(t) + (b - 1) * math.log1p(-t) - lb)

    mode = (a - 1) / (a + b - 2) if a > 1 and b > 1 else None
    lower_side = x <= a / (a + b)
    lo, hi = (0.0, x) if lower_side else (x, 1.0)
    pts = [mode] if mode is not None and lo < mode < hi else None
    val, _ = integrate.quad(dens, lo, hi, points=pts, epsabs=1e-14, epsrel=1e-13, limit=500)
    return val if lower_side else 1.0 - val


def check_quadrature(n: int, rng: np.random.Generator, tol: float = 1e-10) -> CheckResult:
    bad = []
    for _ in range(n):
        a, b = rng.uniform(0.5, 500.0, size=2)
        x = rng.uniform(0.0, 1.0)
        got = specfun.reg_inc_beta(a, b, x)
        want = quad_cdf(a, b, x)
        if not abs(got - want) <= tol:
            bad.append(f"a={a!r}, b={b!r}, x={x!r}: {got!r} vs quadrature {want!r}")
    return CheckResult("incomplete beta vs quadrature", n, bad, f"a,b in [0.5, 500], x in (0, 1), tol {tol:g}")


def check_tail_bounds(
    n: int,
    rng: np.random.Generator,
    tail: Callable[[float, float, float], float] = specfun.log_beta_upper_tail,
    rtol: float = 1e-10,
) -> CheckResult:
    """Two-sided tail bounds on ``n`` triples for each branch (a >= 1, a < 1)."""
    bad = []
    for branch in ("a>=1", "a<1"):
        for _ in range(n):
            b = rng.uniform(0.5, 500.0)
            a = rng.uniform(1.0, 250.0) if branch == "a>=1" else rng.uniform(0.05, 1.0)
            x0 = max((a - 1) / (a + b), 0.0)
            x = rng.uniform(x0, 1.0)
            if x <= x0:
                continue
            lo, hi = specfun.tail_log_bounds(a, b, x)
            got = tail(a, b, x)
            slack = rtol * max(1.0, abs(got))
            if not (lo - slack <= got <= hi + slack):
                bad.append(f"a={a!r}, b={b!r}, x={x!r}: ln tail {got!r} outside [{lo!r}, {hi!r}]")
    return CheckResult("beta tail two-sided bounds", 2 * n, bad, "both branches, b in [0.5, 500]")


def check_gamma_ratio(p_min: int = 1, p_max: int = 40, n_max: int = 200) -> CheckResult:
    """Gamma-ratio bounds over a (p, n) grid.

    Gamma(n/2) >= Gamma((n-1)/2) sqrt((n-1)/2) fails for every n, so grids
    starting at p = 1 always report violations.
    """
    bad = []
    count = 0
    for p in range(p_min, p_max + 1):
        for n in range(p + 1, n_max + 1):
            count += 1
            if not specfun.gamma_ratio_check(p, n):
                bad.append(f"p={p}, n={n}")
    return CheckResult("gamma ratio bounds", count, bad, f"p in {p_min}..{p_max}, n in p+1..{n_max}")


def run_specfun_checks(
    samples: int = 1000,
    seed: int = 0,
    tail: Callable[[float, float, float], float] | None = None,
    p_min: int = 1,
    p_max: int = 40,
    n_max: int = 200,
) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_quadrature(samples, rng),
        check_tail_bounds(samples, rng, tail or specfun.log_beta_upper_tail),
        check_gamma_ratio(p_min, p_max, n_max),
    ]
