"""Dataset preparation and per-variable discontinuity statistics.

After :func:`center`, the treated region is the nonnegative orthant. For each
running variable ``j`` the conditional marginal density of ``z_j`` given
``z_{-j} >= 0`` is estimated on both sides of 0; the jump between the two
one-sided estimates, and its variance, form a :class:`MarginalStat`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateVariance, InsufficientLocalData
from .lpdensity import (
    TRIANGULAR,
    BandwidthSpec,
    Kernel,
    Sample,
    fit_local_poly,
    get_kernel,
    select_bandwidth,
    variance_hat,
)

TREATED_ABOVE = "treated_above"
TREATED_BELOW = "treated_below"
_DIRECTION_ALIASES = {
    "treated_above": TREATED_ABOVE, "above": TREATED_ABOVE, "ge": TREATED_ABOVE,
    "treated_below": TREATED_BELOW, "below": TREATED_BELOW, "le": TREATED_BELOW,
}


@dataclass(frozen=True)
class Dataset:
    """``n x d`` running-variable matrix."""

    data: np.ndarray
    variable_names: tuple[str, ...] | None = None
    centered: bool = False

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigError(f"data must be a non-empty n x d matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("data contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        names = self.variable_names
        if names is None:
            names = tuple(f"z{j + 1}" for j in range(arr.shape[1]))
        names = tuple(str(v) for v in names)
        if len(names) != arr.shape[1]:
            raise ConfigError(f"{len(names)} variable names for {arr.shape[1]} columns")
        object.__setattr__(self, "variable_names", names)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def treated(self) -> np.ndarray:
        """Boolean mask of rows in the nonnegative orthant (centered data)."""
        return np.all(self.data >= 0, axis=1)


@dataclass(frozen=True)
class CutoffSpec:
    cutoffs: tuple[float, ...]
    directions: tuple[str, ...]

    def __post_init__(self):
        cutoffs = tuple(float(c) for c in self.cutoffs)
        if not all(math.isfinite(c) for c in cutoffs):
            raise ConfigError("cutoffs must be finite")
        try:
            directions = tuple(_DIRECTION_ALIASES[str(d).strip().lower()] for d in self.directions)
        except KeyError as exc:
            raise ConfigError(f"unknown direction {exc.args[0]!r}; use treated_above or treated_below") from None
        if len(cutoffs) != len(directions):
            raise ConfigError(f"{len(cutoffs)} cutoffs but {len(directions)} directions")
        object.__setattr__(self, "cutoffs", cutoffs)
        object.__setattr__(self, "directions", directions)

    @classmethod
    def zeros(cls, d: int) -> "CutoffSpec":
        return cls((0.0,) * d, (TREATED_ABOVE,) * d)


def center(dataset: Dataset, spec: CutoffSpec) -> Dataset:
    """Shift (and flip where treated below) so treatment is ``z >= 0``."""
    if len(spec.cutoffs) != dataset.d:
        raise ConfigError(f"{len(spec.cutoffs)} cutoffs for {dataset.d} running variables")
    c = np.asarray(spec.cutoffs)
    sign = np.array([1.0 if d == TREATED_ABOVE else -1.0 for d in spec.directions])
    return Dataset(sign * (dataset.data - c), dataset.variable_names, centered=True)


def conditional_subsample(dataset: Dataset, j: int) -> tuple[Sample, int, int, int]:
    """Values of ``z_j`` over rows with every other coordinate ``>= 0``.

    Returns ``(sample, n_j, n_j_plus, n_j_minus)`` where the plus side is
    ``z_j >= 0``.
    """
    if not 0 <= j < dataset.d:
        raise ConfigError(f"variable index {j} out of range for d={dataset.d}")
    others = np.delete(dataset.data, j, axis=1)
    keep = np.all(others >= 0, axis=1)
    col = dataset.data[keep, j]
    n_j = int(col.size)
    if n_j == 0:
        raise InsufficientLocalData(
            f"no observations with the other running variables on the treated side (variable {j})"
        )
    n_plus = int(np.count_nonzero(col >= 0))
    return Sample(col), n_j, n_plus, n_j - n_plus


@dataclass(frozen=True)
class MarginalStat:
    """Discontinuity statistic for one running variable.

    ``f_plus``/``f_minus`` are the order-``p`` one-sided estimates of the
    conditional marginal density at 0 (each already multiplied by its side
    share), ``theta_hat`` their difference. ``f_plus_rbc``/``f_minus_rbc`` and
    ``theta_rbc`` are the order-``q`` counterparts at the same bandwidths; the
    robust bias-corrected ratio ``z = theta_rbc / sigma_hat`` is what the
    test procedures use. A side with no observations contributes zero and has
    ``h = None``.
    """

    j: int
    theta_hat: float
    sigma2_hat: float
    n_j: int
    n_j_plus: int
    n_j_minus: int
    h_plus: float | None
    h_minus: float | None
    f_plus: float
    f_minus: float
    theta_rbc: float
    f_plus_rbc: float = 0.0
    f_minus_rbc: float = 0.0

    @property
    def sigma_hat(self) -> float:
        return math.sqrt(self.sigma2_hat)

    @property
    def z(self) -> float:
        return self.theta_rbc / self.sigma_hat

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sigma_hat"] = self.sigma_hat
        out["z"] = self.z
        return out

    @classmethod
    def from_z(cls, z: float, sigma: float = 1.0, j: int = 0) -> "MarginalStat":
        """Synthetic record with a given standardized statistic (used for
        driving the test procedures directly)."""
        theta = z * sigma
        return cls(j=j, theta_hat=theta, sigma2_hat=sigma * sigma, n_j=0, n_j_plus=0,
                   n_j_minus=0, h_plus=None, h_minus=None, f_plus=theta, f_minus=0.0,
                   theta_rbc=theta, f_plus_rbc=theta, f_minus_rbc=0.0)


def _side(sample: Sample, n_j: int, bw: BandwidthSpec, kernel: Kernel, p: int, q: int):
    """Order-p and order-q density at 0 for one side, scaled to the conditional
    marginal, plus its variance contribution."""
    if sample is None:
        return None, 0.0, 0.0, 0.0
    h = select_bandwidth(sample, 0.0, p, kernel, bw, min_local=q + 2)
    share = sample.n / n_j
    f_p = fit_local_poly(sample, 0.0, h, p, kernel).density
    f_q = fit_local_poly(sample, 0.0, h, q, kernel).density
    v_q = variance_hat(sample, 0.0, h, q, kernel).value
    var = sample.n / (h * n_j * n_j) * v_q
    return h, share * f_p, share * f_q, var


def marginal_stat(dataset: Dataset, j: int, bw: BandwidthSpec | None = None,
                  kernel: Kernel | str = TRIANGULAR, p: int = 2, q: int | None = None,
                  bw_minus: BandwidthSpec | None = None) -> MarginalStat:
    """Discontinuity statistic at 0 for running variable ``j``.

    Parameters
    ----------
    dataset : Dataset
        Centered data.
    j : int
        Column index.
    bw : BandwidthSpec, optional
        Bandwidth rule for the plus side, and for the minus side unless
        ``bw_minus`` is given. Defaults to automatic selection.
    kernel : Kernel or str
    p, q : int
        Orders of the point-estimate and bias-corrected fits (``q = p + 1``
        by default). Both fits share the order-``p`` bandwidth.
    """
    if not dataset.centered:
        raise ConfigError("marginal_stat requires a centered dataset")
    kernel = get_kernel(kernel)
    q = p + 1 if q is None else q
    bw = bw or BandwidthSpec()
    bw_minus = bw_minus or bw

    sample, n_j, n_plus, n_minus = conditional_subsample(dataset, j)
    vals = sample.values
    right = Sample(vals[vals >= 0], support_lower=0.0) if n_plus else None
    left = Sample(vals[vals < 0], support_upper=0.0) if n_minus else None
    try:
        h_plus, f_plus, fq_plus, var_plus = _side(right, n_j, bw, kernel, p, q)
        h_minus, f_minus, fq_minus, var_minus = _side(left, n_j, bw_minus, kernel, p, q)
    except InsufficientLocalData as exc:
        raise InsufficientLocalData(f"variable {j}: {exc}") from None

    sigma2 = var_plus + var_minus
    if not sigma2 > 0 or not math.isfinite(sigma2):
        raise DegenerateVariance(f"variable {j}: variance estimate {sigma2!r} is not positive")
    return MarginalStat(
        j=j, theta_hat=f_plus - f_minus, sigma2_hat=sigma2, n_j=n_j,
        n_j_plus=n_plus, n_j_minus=n_minus, h_plus=h_plus, h_minus=h_minus,
        f_plus=f_plus, f_minus=f_minus, theta_rbc=fq_plus - fq_minus,
        f_plus_rbc=fq_plus, f_minus_rbc=fq_minus,
    )


def marginal_stats(dataset: Dataset, bw: BandwidthSpec | Sequence | None = None,
                   kernel: Kernel | str = TRIANGULAR, p: int = 2, q: int | None = None) -> list[MarginalStat]:
    """:func:`marginal_stat` for every column.

    ``bw`` may be a single spec or one entry per variable, each entry either a
    spec or a ``(minus, plus)`` pair of specs.
    """
    out = []
    for j in range(dataset.d):
        spec = bw[j] if isinstance(bw, (list, tuple)) else bw
        if isinstance(spec, tuple):
            minus, plus = spec
            out.append(marginal_stat(dataset, j, plus, kernel, p, q, bw_minus=minus))
        else:
            out.append(marginal_stat(dataset, j, spec, kernel, p, q))
    return out
