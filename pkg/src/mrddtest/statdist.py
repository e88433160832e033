"""Scalar distribution utilities: standard normal, central chi-square, and
the critical value of the maximum of independent absolute normals.

Everything here is a pure function of its arguments and uses only ``math``
(plus :class:`statistics.NormalDist` as the starting point for the normal
quantile).
"""

from __future__ import annotations

import math
from statistics import NormalDist
from typing import Callable

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_EPS = 1e-15
_TINY = 1e-300
_STD_NORMAL = NormalDist()


def _check_finite(x: float, name: str = "x") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def _check_open_prob(p: float) -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    return p


def _check_df(df: int) -> int:
    if int(df) != df or df < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df!r}")
    return int(df)


# ---------------------------------------------------------------------------
# Standard normal
# ---------------------------------------------------------------------------

def normal_pdf(x: float) -> float:
    x = _check_finite(x)
    return math.exp(-0.5 * x * x) / _SQRT2PI


def normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to double precision in both tails."""
    x = _check_finite(x)
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_sf(x: float) -> float:
    """Upper tail ``1 - normal_cdf(x)`` without cancellation."""
    x = _check_finite(x)
    return 0.5 * math.erfc(x / _SQRT2)


def normal_quantile(p: float) -> float:
    """Inverse of :func:`normal_cdf` on the open unit interval."""
    p = _check_open_prob(p)
    x = _STD_NORMAL.inv_cdf(p)
    # one Newton polish against our own cdf, working in the smaller tail
    for _ in range(2):
        dens = math.exp(-0.5 * x * x) / _SQRT2PI
        if dens < _TINY:
            break
        if p < 0.5:
            step = (normal_cdf(x) - p) / dens
        else:
            step = ((1.0 - p) - normal_sf(x)) / dens
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


# ---------------------------------------------------------------------------
# Regularized incomplete gamma and chi-square
# ---------------------------------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    """Lower regularized gamma P(a, x) by its power series (x < a + 1)."""
    if x == 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a: float, x: float) -> float:
    """Upper regularized gamma Q(a, x) by modified Lentz continued fraction
    (x >= a + 1)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function P(a, x)."""
    if a <= 0:
        raise DomainError("shape a must be positive")
    if x < 0:
        raise DomainError("x must be nonnegative")
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_contfrac(a, x)


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise DomainError("shape a must be positive")
    if x < 0:
        raise DomainError("x must be nonnegative")
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_contfrac(a, x)


def chi2_pdf(x: float, df: int) -> float:
    df = _check_df(df)
    x = _check_finite(x)
    if x < 0:
        return 0.0
    k = 0.5 * df
    if x == 0.0:
        if df == 1:
            return math.inf
        return 0.5 if df == 2 else 0.0
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def chi2_cdf(x: float, df: int) -> float:
    df = _check_df(df)
    x = _check_finite(x)
    if x < 0:
        raise DomainError(f"chi-square support is [0, inf), got x={x!r}")
    if df == 2:
        return -math.expm1(-0.5 * x)
    return gamma_p(0.5 * df, 0.5 * x)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail ``1 - chi2_cdf(x, df)`` computed directly."""
    df = _check_df(df)
    x = _check_finite(x)
    if x < 0:
        raise DomainError(f"chi-square support is [0, inf), got x={x!r}")
    if df == 2:
        return math.exp(-0.5 * x)
    return gamma_q(0.5 * df, 0.5 * x)


def solve_increasing(
    func: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    deriv: Callable[[float], float] | None = None,
    tol: float = 1e-12,
    max_iter: int = 300,
) -> float:
    """Root of ``func(x) = target`` for nondecreasing ``func`` on ``[lo, hi]``.

    Bisection keeps a valid bracket; when ``deriv`` is given, Newton steps are
    taken whenever they land strictly inside the bracket.
    """
    if func(lo) > target or func(hi) < target:
        raise DomainError("target is not bracketed")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = func(x) - target
        if fx == 0.0:
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        nxt = 0.5 * (lo + hi)
        if deriv is not None:
            g = deriv(x)
            if g > 0 and math.isfinite(g):
                cand = x - fx / g
                if lo < cand < hi:
                    nxt = cand
        if abs(nxt - x) <= tol * max(abs(nxt), 1e-300) or hi - lo <= tol * max(abs(hi), 1e-300):
            return nxt
        x = nxt
    return x


def chi2_quantile(p: float, df: int) -> float:
    """Inverse of :func:`chi2_cdf`; bracketed bisection refined by Newton."""
    p = _check_open_prob(p)
    df = _check_df(df)
    if df == 2:
        return -2.0 * math.log1p(-p)
    if df == 1:
        z = normal_quantile(0.5 + 0.5 * p) if p < 0.5 else -normal_quantile(0.5 * (1.0 - p))
        return z * z
    hi = max(1.0, float(df))
    if p > 0.5:
        # solve on the upper tail to keep relative accuracy near p -> 1
        q = 1.0 - p
        while chi2_sf(hi, df) >= q:
            hi *= 2.0
        return solve_increasing(lambda x: -chi2_sf(x, df), -q, 0.0, hi,
                                deriv=lambda x: chi2_pdf(x, df))
    while chi2_cdf(hi, df) <= p:
        hi *= 2.0
    return solve_increasing(lambda x: chi2_cdf(x, df), p, 0.0, hi,
                            deriv=lambda x: chi2_pdf(x, df))


# ---------------------------------------------------------------------------
# Maximum of d independent |N(0,1)|
# ---------------------------------------------------------------------------

def max_abs_normal_cdf(c: float, d: int) -> float:
    """P(max_j |X_j| <= c) for X ~ N(0, I_d)."""
    d = _check_df(d)
    c = _check_finite(c, "c")
    if c <= 0:
        return 0.0
    return math.erf(c / math.sqrt(2.0)) ** d


def max_abs_normal_sf(c: float, d: int) -> float:
    """P(max_j |X_j| > c), computed as ``-expm1(d * log1p(-2 sf(c)))``."""
    d = _check_df(d)
    c = _check_finite(c, "c")
    two_sf = 2.0 * normal_sf(c)
    if c <= 0 or two_sf >= 1.0:
        return 1.0
    return -math.expm1(d * math.log1p(-two_sf))


def max_abs_normal_quantile(p: float, d: int) -> float:
    """Value ``c`` with ``(2 * normal_cdf(c) - 1) ** d == p``."""
    p = _check_open_prob(p)
    d = _check_df(d)
    # per-coordinate two-sided tail mass t = 1 - p**(1/d)
    t = -math.expm1(math.log(p) / d)
    return -normal_quantile(0.5 * t)
