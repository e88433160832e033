"""Simulation designs, rejection-rate studies and local asymptotic power.

Every replication draws from its own generator, derived from ``(seed, r)``
with :class:`numpy.random.SeedSequence` (``entropy=seed, spawn_key=(r,)``).
A study's result therefore depends only on its configuration, never on the
order in which replications run or on how many worker processes share them.
Normal variates are inverse-CDF transforms of open-interval uniforms.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from . import statdist
from .errors import ConfigError, MrddError
from .marginals import Dataset, marginal_stats
from .procedures import METHODS, bct_test, check_alpha, distance_test, mt_test, mtmax_test

DEFAULT_SEED = 20240917
MODEL_KINDS = ("model1", "model2", "model3", "model4")
POWER_METHODS = ("MT", "BCT", "MTMAX")


@dataclass(frozen=True)
class ModelSpec:
    """One of the four simulation designs.

    ``model1``: d iid U(-1, 1). ``model2``: d iid N(1, 1). ``model3``:
    opposite-direction manipulation of two U(-1, 1) variables with flip
    probability ``gamma``. ``model4``: Z1 ~ N(0, 1) and Z2 ~ U(0, 1) with
    probability ``gamma``, else U(-1, 0).
    """

    kind: str
    d: int = 2
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.kind!r}; choose from {MODEL_KINDS}")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"d must be a positive integer, got {self.d!r}")
        if self.kind in ("model3", "model4"):
            if self.d != 2:
                raise ConfigError(f"{self.kind} has exactly two running variables")
            if not 0.0 <= self.gamma <= 1.0:
                raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma!r}")

    @property
    def param(self) -> str:
        if self.kind in ("model1", "model2"):
            return f"d={self.d}"
        name = "gamma1" if self.kind == "model3" else "gamma2"
        return f"{name}={self.gamma:g}"


def model1(d: int = 2) -> ModelSpec:
    return ModelSpec("model1", d)


def model2(d: int = 2) -> ModelSpec:
    return ModelSpec("model2", d)


def model3(gamma1: float) -> ModelSpec:
    return ModelSpec("model3", 2, float(gamma1))


def model4(gamma2: float) -> ModelSpec:
    return ModelSpec("model4", 2, float(gamma2))


@dataclass(frozen=True)
class SimConfig:
    n: int
    reps: int
    alpha: float = 0.05
    seed: int = DEFAULT_SEED
    methods: tuple[str, ...] = METHODS

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 100:
            raise ConfigError(f"n must be an integer >= 100, got {self.n!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigError(f"reps must be a positive integer, got {self.reps!r}")
        check_alpha(self.alpha)
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        methods = tuple(self.methods)
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise ConfigError(f"unknown or empty methods {bad}; choose from {list(METHODS)}")
        object.__setattr__(self, "methods", methods)


@dataclass
class StudyResult:
    model: ModelSpec
    config: SimConfig
    rejections: dict[str, int]
    successes: dict[str, int]
    failures: dict[str, int]

    @property
    def rates(self) -> dict[str, float]:
        """Rejection fraction over successful replications (NaN if none)."""
        return {m: (self.rejections[m] / self.successes[m]) if self.successes[m] else math.nan
                for m in self.config.methods}

    def rows(self) -> list[dict]:
        """One flat record per method, in the fixed CSV column order."""
        rates = self.rates
        return [
            {
                "model": self.model.kind,
                "param": self.model.param,
                "n": self.config.n,
                "reps": self.config.reps,
                "alpha": self.config.alpha,
                "method": m,
                "reject_rate": rates[m],
                "failures": self.failures[m],
                "seed": self.config.seed,
            }
            for m in self.config.methods
        ]


# ---------------------------------------------------------------------------
# Random streams and generators
# ---------------------------------------------------------------------------

def rep_stream(seed: int, r: int) -> np.random.Generator:
    """Generator for replication ``r``; depends only on ``(seed, r)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(r),))))


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1) on a 2**-53 grid."""
    return (rng.integers(0, 2 ** 53, size=size, dtype=np.int64) + 0.5) * 2.0 ** -53


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    return ndtri(open_uniform(rng, size))


def generate(model: ModelSpec, n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` observations (already centered: cutoffs at 0, treated above)."""
    if model.kind == "model1":
        z = 2.0 * rng.random((n, model.d)) - 1.0
    elif model.kind == "model2":
        z = 1.0 + standard_normal(rng, (n, model.d))
    elif model.kind == "model3":
        star = 2.0 * rng.random((n, 2)) - 1.0
        flips = rng.random((n, 2))  # drawn for every gamma so streams stay aligned
        z1, z2 = star[:, 0].copy(), star[:, 1].copy()
        in_a1 = (star[:, 0] < 0) & (-star[:, 0] < star[:, 1])
        in_a2 = (star[:, 0] > star[:, 1]) & (star[:, 1] > 0)
        z1[in_a1 & (flips[:, 0] < model.gamma)] *= -1.0
        z2[in_a2 & (flips[:, 1] < model.gamma)] *= -1.0
        z = np.column_stack([z1, z2])
    else:
        z1 = standard_normal(rng, n)
        upper = rng.random(n) < model.gamma
        u = rng.random(n)
        z = np.column_stack([z1, np.where(upper, u, u - 1.0)])
    return Dataset(z, centered=True)


# ---------------------------------------------------------------------------
# Rejection-rate studies
# ---------------------------------------------------------------------------

def replicate(model: ModelSpec, config: SimConfig, r: int) -> dict[str, bool | None]:
    """Decisions of every requested method on replication ``r``;
    ``None`` marks an estimation failure."""
    data = generate(model, config.n, rep_stream(config.seed, r))
    out: dict[str, bool | None] = {}
    joint = [m for m in config.methods if m in ("MT", "MTMAX", "BCT")]
    if joint:
        try:
            stats = marginal_stats(data)
        except MrddError:
            stats = None
        for m in joint:
            if stats is None:
                out[m] = None
            elif m == "MT":
                out[m] = mt_test(stats, config.alpha).reject
            elif m == "MTMAX":
                out[m] = mtmax_test(stats, config.alpha).reject
            else:
                out[m] = bct_test(stats, config.alpha).reject
    for m, standardize in (("DT", False), ("SDT", True)):
        if m in config.methods:
            try:
                out[m] = distance_test(data, config.alpha, standardize).reject
            except MrddError:
                out[m] = None
    return out


def _replicate_range(args):
    model, config, start, stop = args
    return [replicate(model, config, r) for r in range(start, stop)]


def _chunks(reps: int, parts: int) -> Iterable[tuple[int, int]]:
    size = max(1, math.ceil(reps / parts))
    for start in range(0, reps, size):
        yield start, min(reps, start + size)


def run_rejection_study(model: ModelSpec, config: SimConfig, workers: int = 1) -> StudyResult:
    """Rejection rates of each method over ``config.reps`` replications.

    ``workers > 1`` spreads contiguous blocks of replications over processes;
    the aggregated counts are identical for any ``workers``.
    """
    rej = {m: 0 for m in config.methods}
    ok = {m: 0 for m in config.methods}
    fail = {m: 0 for m in config.methods}

    def absorb(decisions):
        for m, dec in decisions.items():
            if dec is None:
                fail[m] += 1
            else:
                ok[m] += 1
                rej[m] += int(dec)

    if workers <= 1:
        for r in range(config.reps):
            absorb(replicate(model, config, r))
    else:
        tasks = [(model, config, a, b) for a, b in _chunks(config.reps, 4 * workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for block in pool.map(_replicate_range, tasks):
                for decisions in block:
                    absorb(decisions)
    return StudyResult(model, config, rej, ok, fail)


# ---------------------------------------------------------------------------
# Local asymptotic power in the limit experiment
# ---------------------------------------------------------------------------

def critical_values(d: int, alpha: float) -> dict[str, float]:
    return {
        "MT": statdist.chi2_quantile(1.0 - alpha, d),
        "BCT": statdist.normal_quantile(1.0 - alpha / (2 * d)),
        "MTMAX": statdist.max_abs_normal_quantile(1.0 - alpha, d),
    }


def local_asymptotic_power(framework: int, d: int, k_grid: Sequence[float], alpha: float = 0.1,
                           methods: Sequence[str] = POWER_METHODS, draws: int = 1_000_000,
                           rng: np.random.Generator | int | None = None) -> dict[str, dict[float, float]]:
    """Power of MT, BCT and MTMAX when the standardized statistics are
    ``N(mu, I_d)`` with ``mu = k * ones`` (framework 1) or ``mu = k * e_1``
    (framework 2).

    The same base draws are shifted for every ``k`` (common random numbers).
    """
    if framework not in (1, 2):
        raise ConfigError(f"framework must be 1 or 2, got {framework!r}")
    if int(d) != d or d < 1:
        raise ConfigError(f"d must be a positive integer, got {d!r}")
    alpha = check_alpha(alpha)
    bad = [m for m in methods if m not in POWER_METHODS]
    if bad:
        raise ConfigError(f"local power is defined for {POWER_METHODS}, got {bad}")
    if any(k < 0 for k in k_grid):
        raise ConfigError("k must be nonnegative")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(DEFAULT_SEED if rng is None else int(rng))))

    x = standard_normal(rng, (int(draws), d))
    crit = critical_values(d, alpha)
    curves: dict[str, dict[float, float]] = {m: {} for m in methods}
    if framework == 2:
        rest_sq = np.sum(x[:, 1:] ** 2, axis=1)
        rest_max = np.max(np.abs(x[:, 1:]), axis=1) if d > 1 else np.zeros(len(x))
    for k in k_grid:
        k = float(k)
        if framework == 1:
            shifted = x + k
            sq = np.sum(shifted * shifted, axis=1)
            mx = np.max(np.abs(shifted), axis=1)
        else:
            first = x[:, 0] + k
            sq = rest_sq + first * first
            mx = np.maximum(rest_max, np.abs(first))
        for m in methods:
            stat = sq if m == "MT" else mx
            curves[m][k] = float(np.mean(stat > crit[m]))
    return curves


@dataclass
class PowerTable:
    """Flat rows ``framework, d, k, method, power, draws, seed``."""

    rows: list[dict] = field(default_factory=list)

    @classmethod
    def compute(cls, framework: int, ds: Sequence[int], k_grid: Sequence[float], alpha: float,
                draws: int, seed: int, methods: Sequence[str] = POWER_METHODS) -> "PowerTable":
        table = cls()
        for d in ds:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(d),))))
            curves = local_asymptotic_power(framework, d, k_grid, alpha, methods, draws, rng)
            for k in k_grid:
                for m in methods:
                    table.rows.append({"framework": framework, "d": d, "k": float(k), "method": m,
                                       "power": curves[m][float(k)], "draws": int(draws), "seed": int(seed)})
        return table
