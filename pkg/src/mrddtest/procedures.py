"""Manipulation test procedures built on :class:`MarginalStat` records.

``MT``     quadratic form ``sum_j z_j^2`` against a chi-square(d) quantile.
``MTMAX``  ``max_j |z_j|`` against the quantile of the max of d |N(0,1)|.
``BCT``    d two-sided z-tests, each at level alpha/d (Bonferroni).
``DT``     one-dimensional test on the signed distance to the boundary.
``SDT``    as DT after scaling every column to unit standard deviation.

All decisions use the strict rule ``statistic > critical_value``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import statdist
from .errors import ConfigError, DegenerateSample, DegenerateVariance
from .lpdensity import TRIANGULAR, BandwidthSpec, Kernel
from .marginals import Dataset, MarginalStat, marginal_stat, marginal_stats

METHODS = ("MT", "MTMAX", "BCT", "DT", "SDT")


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    method: str
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    per_variable: tuple[MarginalStat, ...] = ()
    df: int | None = None
    distance_stat: MarginalStat | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "df": self.df,
        }


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def _z_scores(stats: Sequence[MarginalStat]) -> np.ndarray:
    if len(stats) == 0:
        raise ConfigError("at least one running variable is required")
    for s in stats:
        if not s.sigma2_hat > 0:
            raise DegenerateVariance(f"variable {s.j}: nonpositive variance {s.sigma2_hat!r}")
    return np.array([s.z for s in stats])


def mt_test(stats: Sequence[MarginalStat], alpha: float = 0.05) -> TestResult:
    alpha = check_alpha(alpha)
    z = _z_scores(stats)
    d = z.size
    t = float(np.sum(z * z))
    crit = statdist.chi2_quantile(1.0 - alpha, d)
    return TestResult("MT", t, crit, statdist.chi2_sf(t, d), t > crit, alpha, tuple(stats), d)


def mtmax_test(stats: Sequence[MarginalStat], alpha: float = 0.05) -> TestResult:
    alpha = check_alpha(alpha)
    z = _z_scores(stats)
    d = z.size
    t = float(np.max(np.abs(z)))
    crit = statdist.max_abs_normal_quantile(1.0 - alpha, d)
    return TestResult("MTMAX", t, crit, statdist.max_abs_normal_sf(t, d), t > crit, alpha, tuple(stats), d)


def bct_test(stats: Sequence[MarginalStat], alpha: float = 0.05) -> TestResult:
    """Bonferroni-corrected separate tests.

    The reported p-value is ``min(1, d * min_j p_j)`` with ``p_j`` the
    two-sided normal p-value of variable ``j``.
    """
    alpha = check_alpha(alpha)
    z = _z_scores(stats)
    d = z.size
    t = float(np.max(np.abs(z)))
    crit = statdist.normal_quantile(1.0 - alpha / (2 * d))
    p_min = 2.0 * statdist.normal_sf(t)
    return TestResult("BCT", t, crit, min(1.0, d * p_min), t > crit, alpha, tuple(stats), d)


def signed_distance(row) -> float:
    """Euclidean distance to the boundary of the nonnegative orthant, positive
    for treated points."""
    row = np.asarray(row, dtype=float)
    return float(signed_distances(row[None, :])[0])


def signed_distances(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    neg = np.minimum(data, 0.0)
    outside = np.sqrt(np.sum(neg * neg, axis=1))
    treated = np.all(data >= 0, axis=1)
    return np.where(treated, np.min(data, axis=1), -outside)


def distance_test(dataset: Dataset, alpha: float = 0.05, standardize: bool = False,
                  bw: BandwidthSpec | None = None, kernel: Kernel | str = TRIANGULAR) -> TestResult:
    """Density-continuity test at 0 of the signed distance to the boundary.

    With ``standardize`` each column is first divided by its sample standard
    deviation (SDT); otherwise raw units are used (DT).
    """
    alpha = check_alpha(alpha)
    if not dataset.centered:
        raise ConfigError("distance_test requires a centered dataset")
    data = dataset.data
    if standardize:
        sd = np.std(data, axis=0, ddof=1) if dataset.n > 1 else np.zeros(dataset.d)
        if np.any(~(sd > 0)):
            raise DegenerateSample("cannot standardize a column with zero standard deviation")
        data = data / sd
    dist = Dataset(signed_distances(data)[:, None], ("distance",), centered=True)
    stat = marginal_stat(dist, 0, bw, kernel)
    t = abs(stat.z)
    crit = statdist.normal_quantile(1.0 - alpha / 2.0)
    method = "SDT" if standardize else "DT"
    return TestResult(method, t, crit, 2.0 * statdist.normal_sf(t), t > crit, alpha, (), 1, stat)


def run_tests(dataset: Dataset, methods: Sequence[str] = METHODS, alpha: float = 0.05,
              stats: Sequence[MarginalStat] | None = None, bw=None,
              kernel: Kernel | str = TRIANGULAR) -> dict[str, TestResult]:
    """Run the requested procedures on a centered dataset.

    The marginal statistics are computed once and shared by MT, MTMAX and
    BCT; pass ``stats`` to reuse precomputed ones.
    """
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"unknown method(s) {unknown}; choose from {list(METHODS)}")
    out: dict[str, TestResult] = {}
    if stats is None and any(m in ("MT", "MTMAX", "BCT") for m in methods):
        stats = marginal_stats(dataset, bw, kernel)
    scalar_bw = bw if isinstance(bw, BandwidthSpec) else None
    for m in methods:
        if m == "MT":
            out[m] = mt_test(stats, alpha)
        elif m == "MTMAX":
            out[m] = mtmax_test(stats, alpha)
        elif m == "BCT":
            out[m] = bct_test(stats, alpha)
        elif m == "DT":
            out[m] = distance_test(dataset, alpha, False, scalar_bw, kernel)
        elif m == "SDT":
            out[m] = distance_test(dataset, alpha, True, scalar_bw, kernel)
    return out
