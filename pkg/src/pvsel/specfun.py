"""Log-gamma, regularized incomplete beta and log-domain beta tails.

The continued fraction is evaluated with the modified Lentz method.  Tail
probabilities are returned on the log scale because selection p-values for
strong signals underflow double precision long before they stop mattering.

Also contains two analytic inequalities (a two-sided beta-tail bound and a
gamma-ratio bound) that the test-suite and ``pvsel check-specfun`` use as
oracles for the numerical code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

MAX_ITER = 500
CF_TOL = 1e-14
_TINY = 1e-300


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters of a Beta(a, b) distribution."""

    a: float
    b: float

    def __post_init__(self):
        _check_shapes(self.a, self.b)


def _check_shapes(a: float, b: float) -> None:
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0 or b <= 0:
        raise DomainError(f"beta shapes must be positive and finite, got a={a}, b={b}")


def _check_unit(x: float) -> None:
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for positive finite ``x``."""
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_gamma requires a positive finite argument, got {x}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    """ln B(a, b)."""
    _check_shapes(a, b)
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz.

    Multiplying by ``x**a (1-x)**b / (a B(a, b))`` gives I_x(a, b).  Converges
    quickly for ``x < (a + 1) / (a + b + 2)``.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    delta = math.inf
    for m in range(1, MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}",
        abs(delta - 1.0),
    )


def _log_front(a: float, b: float, x: float) -> float:
    return a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b), the Beta(a, b) CDF.

    Uses ``I_x(a, b) = 1 - I_{1-x}(b, a)`` when ``x > (a + 1) / (a + b + 2)``
    so the continued fraction is always evaluated where it converges fast.
    """
    _check_shapes(a, b)
    _check_unit(x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x > (a + 1.0) / (a + b + 2.0):
        return 1.0 - math.exp(_log_front(a, b, x)) * _betacf(b, a, 1.0 - x) / b
    return math.exp(_log_front(a, b, x)) * _betacf(a, b, x) / a


def log_beta_upper_tail(a: float, b: float, x: float) -> float:
    """ln P[B > x] for B ~ Beta(a, b), without underflow.

    The smaller of the two tails is always the one computed directly; the
    other is obtained with ``log1p``.  Returns ``0.0`` at ``x = 0`` and
    ``-inf`` at ``x = 1``.
    """
    _check_shapes(a, b)
    _check_unit(x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return -math.inf
    front = _log_front(a, b, x)
    if x > (a + 1.0) / (a + b + 2.0):
        return front + math.log(_betacf(b, a, 1.0 - x)) - math.log(b)
    lower = math.exp(front) * _betacf(a, b, x) / a
    return math.log1p(-lower)


def beta_upper_tail(a: float, b: float, x: float) -> float:
    """P[B > x] on the linear scale; may underflow to zero."""
    return math.exp(log_beta_upper_tail(a, b, x))


# --------------------------------------------------------------------------
# Analytic bounds used as oracles
# --------------------------------------------------------------------------


def __tail_bound_terms(a: float, b: float, x: float) -> tuple[float, float]:
    _check_shapes(a, b)
    if not (0.0 < x < 1.0) or x <= (a - 1.0) / (a + b):
        raise DomainError(
            f"tail bounds need (a-1)/(a+b) < x < 1, got a={a}, b={b}, x={x}"
        )
    log_core = b * math.log1p(-x) + (a - 1.0) * math.log(x) - log_beta(a, b) - math.log(b)
    # 1 + L(a, b, x) simplifies to (b + 1) x / (1 - a + (a + b) x)
    log_one_plus_l = math.log((b + 1.0) * x) - math.log(1.0 - a + (a + b) * x)
    return log_core, log_one_plus_l


def tail_bound_factor(a: float, b: float, x: float) -> float:
    """L(a, b, x) = (a - 1)(1 - x) / (1 - a + (a + b) x)."""
    den = 1.0 - a + (a + b) * x
    if den == 0.0:
        raise DomainError(f"L(a, b, x) undefined at x = (a-1)/(a+b), a={a}, b={b}")
    return (a - 1.0) * (1.0 - x) / den


def tail_log_bounds(a: float, b: float, x: float) -> tuple[float, float]:
    """Log-scale (lower, upper) bounds on ln P[B_{a,b} > x].

    With ``core = (1-x)^b x^(a-1) / (B(a, b) b)`` the tail lies between
    ``core`` and ``core * (1 + L(a, b, x))``; which one is the lower bound
    depends on whether ``a >= 1``.  Requires ``x > (a - 1) / (a + b)``.
    """
    log_core, log_one_plus_l = __tail_bound_terms(a, b, x)
    other = log_core + log_one_plus_l
    if a >= 1.0:
        return log_core, other
    return other, log_core


def tail_bounds(a: float, b: float, x: float) -> tuple[float, float]:
    """Linear-scale version of :func:`tail_log_bounds`."""
    lo, hi = tail_log_bounds(a, b, x)
    return math.exp(lo), math.exp(hi)


def gamma_ratio_log_terms(p_dim: int, n: int) -> tuple[float, float, float]:
    """ln of (Gamma(b) b^a, Gamma(a+b), 2/sqrt(pi) Gamma(b) (a+b)^a), a=p/2, b=(n-p)/2."""
    if not (1 <= p_dim < n):
        raise DomainError(f"need n > p >= 1, got p={p_dim}, n={n}")
    a = p_dim / 2.0
    b = (n - p_dim) / 2.0
    lower = log_gamma(b) + a * math.log(b)
    middle = log_gamma(a + b)
    upper = math.log(2.0 / math.sqrt(math.pi)) + log_gamma(b) + a * math.log(a + b)
    return lower, middle, upper


def gamma_ratio_check(p_dim: int, n: int, rtol: float = 1e-12) -> bool:
    """Whether Gamma(b) b^a <= Gamma(a+b) <= (2/sqrt(pi)) Gamma(b) (a+b)^a.

    Compared in log domain with a relative round-off slack ``rtol``; the lower
    inequality is an equality at ``p = 2``.  The lower inequality is false for
    ``p = 1`` (a = 1/2) at every ``n``.
    """
    lower, middle, upper = gamma_ratio_log_terms(p_dim, n)
    slack = rtol * max(1.0, abs(middle))
    return lower <= middle + slack and middle <= upper + slack
