"""Manipulation tests for regression discontinuity designs with several
running variables, based on local polynomial density estimation."""

from . import cli, lpdensity, marginals, montecarlo, procedures, statdist
from .errors import ConfigError, DataError, DomainError, MrddError
from .marginals import CutoffSpec, Dataset, center, marginal_stat, marginal_stats
from .procedures import METHODS, TestResult, run_tests

__version__ = "0.1.0"
