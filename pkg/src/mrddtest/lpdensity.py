"""Local polynomial density estimation from the empirical CDF.

The density at ``x`` is the slope coefficient of a kernel-weighted
polynomial fit of the empirical CDF around ``x``. For odd ``p - 1`` (the
default ``p = 2``) the estimator needs no explicit boundary correction: a
fit at the edge of the support, using only the points on one side, is
still consistent.

Internally the design uses the scaled basis ``r_p((z - x) / h)``; reported
coefficients are converted back to the raw basis ``r_p(z - x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.linalg import cho_solve

from .errors import (
    DegenerateSample,
    DomainError,
    InsufficientLocalData,
    SingularDesign,
)

__all__ = [
    "Kernel",
    "TRIANGULAR",
    "UNIFORM",
    "EPANECHNIKOV",
    "KERNELS",
    "get_kernel",
    "Sample",
    "LocalPolyFit",
    "VarianceEstimate",
    "BandwidthSpec",
    "empirical_cdf",
    "fit_local_poly",
    "variance_hat",
    "bias_components",
    "variance_components",
    "select_bandwidth",
]

PIVOT_RTOL = 1e-12
WIDEN_FACTOR = 1.5
MAX_WIDENINGS = 10
MIN_AUTO_SAMPLE = 10
# lower clamp on the plug-in bandwidth, in units of sd * n**(-1/(2p+1))
H_FLOOR = 0.1
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Symmetric kernel supported on [-1, 1]."""

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __call__(self, u):
        return self.evaluate(np.asarray(u, dtype=float))


def _triangular(u):
    return np.clip(1.0 - np.abs(u), 0.0, None)


def _uniform(u):
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


def _epanechnikov(u):
    return np.clip(0.75 * (1.0 - u * u), 0.0, None)


TRIANGULAR = Kernel("triangular", _triangular)
UNIFORM = Kernel("uniform", _uniform)
EPANECHNIKOV = Kernel("epanechnikov", _epanechnikov)
KERNELS = {k.name: k for k in (TRIANGULAR, UNIFORM, EPANECHNIKOV)}


def get_kernel(name: str | Kernel) -> Kernel:
    if isinstance(name, Kernel):
        return name
    try:
        return KERNELS[name]
    except KeyError:
        raise DomainError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    """Sorted univariate sample with (possibly infinite) support bounds."""

    values: np.ndarray
    support_lower: float = -math.inf
    support_upper: float = math.inf

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float).ravel())
        if vals.size == 0:
            raise DomainError("sample must contain at least one value")
        if not np.all(np.isfinite(vals)):
            raise DomainError("sample contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def scaled(self, s: float, t: float = 0.0) -> "Sample":
        """Affine image ``s * z + t`` (``s > 0``) with matching support."""
        return Sample(s * self.values + t, s * self.support_lower + t, s * self.support_upper + t)


@dataclass(frozen=True)
class LocalPolyFit:
    point: float
    order: int
    bandwidth: float
    coefficients: np.ndarray
    density: float
    n_local: int


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    method: str


@dataclass(frozen=True)
class BandwidthSpec:
    """``auto`` selects a plug-in bandwidth; ``fixed`` passes ``fixed_value`` through."""

    mode: str = "auto"
    fixed_value: float | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "fixed"):
            raise DomainError(f"bandwidth mode must be 'auto' or 'fixed', got {self.mode!r}")
        if self.mode == "fixed":
            if self.fixed_value is None or not (self.fixed_value > 0) or not math.isfinite(self.fixed_value):
                raise DomainError("fixed bandwidth requires a finite value > 0")

    @classmethod
    def fixed(cls, value: float) -> "BandwidthSpec":
        return cls("fixed", float(value))


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

def empirical_cdf(sample: Sample, x) -> float | np.ndarray:
    """Right-continuous empirical CDF ``#{z_i <= x} / n``."""
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    out = np.searchsorted(sample.values, x, side="right") / sample.n
    return float(out) if np.ndim(out) == 0 else out


def _check_order(p: int) -> int:
    if int(p) != p or p < 1:
        raise DomainError(f"polynomial order must be an integer >= 1, got {p!r}")
    return int(p)


def _window(sample: Sample, x: float, h: float, p: int, kernel: Kernel):
    """Points with nonzero kernel weight, their scaled offsets, weights and
    the sample's empirical CDF evaluated at them."""
    if not (h > 0) or not math.isfinite(h):
        raise DomainError(f"bandwidth must be finite and > 0, got {h!r}")
    vals = sample.values
    lo = np.searchsorted(vals, x - h, side="left")
    hi = np.searchsorted(vals, x + h, side="right")
    z = vals[lo:hi]
    u = (z - x) / h
    k = kernel(u)
    keep = k > 0
    if np.count_nonzero(keep) < p + 2:
        raise InsufficientLocalData(
            f"only {int(np.count_nonzero(keep))} observations with positive kernel weight "
            f"at x={x:g}, h={h:g}; need at least {p + 2} for order {p}"
        )
    z, u, k = z[keep], u[keep], k[keep]
    ecdf = np.searchsorted(vals, z, side="right") / sample.n
    return z, u, k, ecdf, hi - lo


def _cholesky(gram: np.ndarray) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise SingularDesign("local design matrix is not positive definite") from None
    piv = np.diag(chol) ** 2
    if piv.min() <= PIVOT_RTOL * np.diag(gram).max():
        raise SingularDesign("local design matrix is numerically singular")
    return chol


def fit_local_poly(sample: Sample, x: float, h: float, p: int = 2,
                   kernel: Kernel = TRIANGULAR) -> LocalPolyFit:
    """Weighted least-squares polynomial fit of the empirical CDF at ``x``.

    Parameters
    ----------
    sample : Sample
        Observations; the empirical CDF is the sample's own.
    x : float
        Evaluation point.
    h : float
        Bandwidth; weights are ``K((z_i - x) / h)``.
    p : int
        Polynomial order (>= 1).
    kernel : Kernel

    Returns
    -------
    LocalPolyFit
        ``density`` is the linear coefficient, i.e. ``coefficients[1]``.
    """
    p = _check_order(p)
    kernel = get_kernel(kernel)
    _, u, k, ecdf, n_local = _window(sample, x, h, p, kernel)
    basis = np.vander(u, p + 1, increasing=True)
    weighted = basis * k[:, None]
    gram = basis.T @ weighted
    rhs = weighted.T @ ecdf
    chol = _cholesky(gram)
    beta_scaled = cho_solve((chol, True), rhs)
    coef = beta_scaled / h ** np.arange(p + 1)
    return LocalPolyFit(float(x), p, float(h), coef, float(coef[1]), int(n_local))


def variance_hat(sample: Sample, x: float, h: float, p: int = 2,
                 kernel: Kernel = TRIANGULAR, method: str = "fast_identity") -> VarianceEstimate:
    """Plug-in asymptotic variance of the slope estimate at ``x``.

    Returns ``V`` such that ``Var(density) ~ V / (n h)``. Two numerically
    independent routes:

    ``naive_triple_sum``
        The literal O(n^3) sum over ``(i, j, k)``. Meant for small samples.
    ``fast_identity``
        Collapses the sum over ``i`` with
        ``sum_i [1{z_i<=z_j} - F(z_j)][1{z_i<=z_k} - F(z_k)]
        = n (F(min(z_j, z_k)) - F(z_j) F(z_k))`` and evaluates the remaining
        double sum over window points with suffix sums, since ``F`` is
        monotone along the sorted window.
    """
    p = _check_order(p)
    kernel = get_kernel(kernel)
    if method == "fast_identity":
        value = _variance_fast(sample, x, h, p, kernel)
    elif method == "naive_triple_sum":
        value = _variance_naive(sample, x, h, p, kernel)
    else:
        raise DomainError(f"unknown variance method {method!r}")
    return VarianceEstimate(max(value, 0.0), method)


def _variance_fast(sample, x, h, p, kernel) -> float:
    n = sample.n
    _, u, k, ecdf, _ = _window(sample, x, h, p, kernel)
    basis = np.vander(u, p + 1, increasing=True)
    weighted = basis * k[:, None]
    gram = basis.T @ weighted / (n * h)
    chol = _cholesky(gram)
    e1 = np.zeros(p + 1)
    e1[1] = 1.0
    g = cho_solve((chol, True), e1)
    a = weighted @ g
    # sum_{j,k} a_j a_k min(F_j, F_k) with F nondecreasing along the window
    suffix = np.cumsum(a[::-1])[::-1]
    cross = np.sum(ecdf * a * (2.0 * suffix - a))
    mean_term = np.dot(a, ecdf)
    return float((cross - mean_term * mean_term) / (n * n * h ** 3))


def _variance_naive(sample, x, h, p, kernel) -> float:
    _window(sample, x, h, p, kernel)  # same preconditions as the fast path
    z = sample.values
    n = z.size
    u = (z - x) / h
    k = kernel(u)
    r = np.vander(u, p + 1, increasing=True)
    a_hat = (r * k[:, None]).T @ r / (n * h)
    f_hat = np.array([np.mean(z <= zj) for zj in z])
    ind = (z[:, None] <= z[None, :]).astype(float) - f_hat[None, :]  # [i, j]
    wr = r * k[:, None]                                             # [j, a]
    c_hat = np.einsum("ij,ik,ja,kb->ab", ind, ind, wr, wr) / (n ** 3 * h ** 3)
    a_inv = np.linalg.inv(a_hat)
    return float((a_inv @ c_hat @ a_inv)[1, 1])


# ---------------------------------------------------------------------------
# Asymptotic bias / variance constants and bandwidth selection
# ---------------------------------------------------------------------------

def _gauss_pieces(lo: float, hi: float):
    """Gauss-Legendre nodes/weights on [lo, hi], split at 0 where kernels kink."""
    cuts = [lo, hi] if not (lo < 0.0 < hi) else [lo, 0.0, hi]
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (_GL_NODES + 1.0))
        weights.append(half * _GL_WEIGHTS)
    return np.concatenate(nodes), np.concatenate(weights)


def _limits(x, h, support):
    lower, upper = support
    lo = max(-1.0, (lower - x) / h) if math.isfinite(lower) else -1.0
    hi = min(1.0, (upper - x) / h) if math.isfinite(upper) else 1.0
    if not lo < hi:
        raise DomainError(f"evaluation point {x!r} lies outside the support {support!r}")
    return lo, hi


def _kernel_gram(kernel, lo, hi, p):
    t, w = _gauss_pieces(lo, hi)
    r = np.vander(t, p + 1, increasing=True)
    kw = kernel(t) * w
    return (r * kw[:, None]).T @ r, r, t, kw


def _kernel_min_gram(kernel, lo, hi, p):
    """Double integral of ``min(u, v) r(u) r(v)' K(u) K(v)`` over [lo, hi]^2.

    Uses ``min(u, v) = lo + int_lo^hi 1{t < u} 1{t < v} dt`` so the
    integrand becomes the outer product of the tail integrals
    ``G(t) = int_t^hi r(u) K(u) du``, which are smooth piecewise polynomials.
    """
    t_out, w_out = _gauss_pieces(lo, hi)
    tails = np.empty((t_out.size, p + 1))
    for i, t in enumerate(t_out):
        s, ws = _gauss_pieces(t, hi)
        tails[i] = (np.vander(s, p + 1, increasing=True) * (kernel(s) * ws)[:, None]).sum(axis=0)
    s, ws = _gauss_pieces(lo, hi)
    total = (np.vander(s, p + 1, increasing=True) * (kernel(s) * ws)[:, None]).sum(axis=0)
    return lo * np.outer(total, total) + (tails * w_out[:, None]).T @ tails


def _normal_ref(mean, sd, x, deriv):
    """``deriv``-th derivative of the N(mean, sd^2) density at ``x``."""
    z = (x - mean) / sd
    coeffs = np.zeros(deriv + 1)
    coeffs[deriv] = 1.0
    phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return (-1) ** deriv * float(hermeval(z, coeffs)) * phi / sd ** (deriv + 1)


def bias_components(pilot_mean: float, pilot_sd: float, x: float, h: float, p: int = 2,
                    kernel: Kernel = TRIANGULAR,
                    support: tuple[float, float] = (-math.inf, math.inf)) -> float:
    """Leading bias constant ``B(x)`` (density bias ~ ``h**p * B(x)``) under a
    normal reference for ``F^{(p+1)}``."""
    if not pilot_sd > 0:
        raise DomainError("pilot_sd must be positive")
    p = _check_order(p)
    kernel = get_kernel(kernel)
    lo, hi = _limits(x, h, support)
    gram, r, t, kw = _kernel_gram(kernel, lo, hi, p)
    moment = (r * (kw * t ** (p + 1))[:, None]).sum(axis=0)
    deriv = _normal_ref(pilot_mean, pilot_sd, x, p)  # F^{(p+1)} = f^{(p)}
    return deriv / math.factorial(p + 1) * float(np.linalg.solve(gram, moment)[1])


def variance_components(pilot_mean: float, pilot_sd: float, x: float, h: float, p: int = 2,
                        kernel: Kernel = TRIANGULAR,
                        support: tuple[float, float] = (-math.inf, math.inf)) -> float:
    """Asymptotic variance constant ``V(x)`` (``Var ~ V / (n h)``) under a
    normal reference for ``f(x)``."""
    if not pilot_sd > 0:
        raise DomainError("pilot_sd must be positive")
    p = _check_order(p)
    kernel = get_kernel(kernel)
    lo, hi = _limits(x, h, support)
    gram = _kernel_gram(kernel, lo, hi, p)[0]
    psi = _kernel_min_gram(kernel, lo, hi, p)
    g = np.linalg.solve(gram, np.eye(p + 1)[1])
    return _normal_ref(pilot_mean, pilot_sd, x, 0) * float(g @ psi @ g)


def _positive_weight_count(sample: Sample, x: float, h: float, kernel: Kernel) -> int:
    vals = sample.values
    lo = np.searchsorted(vals, x - h, side="left")
    hi = np.searchsorted(vals, x + h, side="right")
    return int(np.count_nonzero(kernel((vals[lo:hi] - x) / h) > 0))


def select_bandwidth(sample: Sample, x: float, p: int = 2, kernel: Kernel = TRIANGULAR,
                     spec: BandwidthSpec | None = None, min_local: int | None = None) -> float:
    """Bandwidth for the order-``p`` density fit at ``x``.

    In ``auto`` mode this is the MSE-optimal plug-in
    ``h = (V / (2p B^2 n))^(1/(2p+1))`` with ``B`` and ``V`` evaluated under a
    normal reference fitted to the sample, clamped to
    ``[H_FLOOR * sd * n^(-1/(2p+1)), range]``. If fewer than ``min_local``
    (default ``p + 2``) points get positive weight, ``h`` is widened by
    ``WIDEN_FACTOR`` up to ``MAX_WIDENINGS`` times.
    """
    spec = spec or BandwidthSpec()
    p = _check_order(p)
    kernel = get_kernel(kernel)
    if spec.mode == "fixed":
        return float(spec.fixed_value)

    n = sample.n
    if n < MIN_AUTO_SAMPLE:
        raise InsufficientLocalData(f"automatic bandwidth needs >= {MIN_AUTO_SAMPLE} observations, got {n}")
    mean = float(np.mean(sample.values))
    sd = float(np.std(sample.values, ddof=1))
    spread = float(sample.values[-1] - sample.values[0])
    if not sd > 0 or not spread > 0:
        raise DegenerateSample("sample has zero standard deviation")
    support = (sample.support_lower, sample.support_upper)
    rate = n ** (-1.0 / (2 * p + 1))
    h_min, h_max = H_FLOOR * sd * rate, spread

    h = min(max(sd * rate, h_min), h_max)
    for _ in range(50):
        bias = bias_components(mean, sd, x, h, p, kernel, support)
        var = variance_components(mean, sd, x, h, p, kernel, support)
        if bias == 0.0:
            h_new = h_max
        else:
            h_new = (var / (2 * p * bias * bias * n)) ** (1.0 / (2 * p + 1))
        h_new = min(max(h_new, h_min), h_max)
        if abs(h_new - h) <= 1e-13 * h:
            h = h_new
            break
        h = h_new

    need = p + 2 if min_local is None else int(min_local)
    for _ in range(MAX_WIDENINGS):
        if _positive_weight_count(sample, x, h, kernel) >= need:
            break
        h *= WIDEN_FACTOR
    if _positive_weight_count(sample, x, h, kernel) < need:
        raise InsufficientLocalData(
            f"fewer than {need} observations near x={x:g} even after {MAX_WIDENINGS} widenings"
        )
    return float(h)
