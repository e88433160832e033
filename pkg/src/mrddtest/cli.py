"""Command-line front end.

Subcommands::

    mrddtest test      run the manipulation tests on a CSV file
    mrddtest simulate  rejection-rate study on one of the simulation designs
    mrddtest power     local asymptotic power curves

Exit codes: 0 success (whatever the test decision), 2 configuration error,
3 data, estimation or I/O error. Results go to stdout (or ``--output``);
warnings go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, DomainError, EmptyData, MrddError
from .lpdensity import KERNELS, BandwidthSpec
from .marginals import CutoffSpec, Dataset, center, marginal_stats
from .montecarlo import (
    DEFAULT_SEED,
    MODEL_KINDS,
    POWER_METHODS,
    ModelSpec,
    PowerTable,
    SimConfig,
    run_rejection_study,
)
from .procedures import METHODS, check_alpha, run_tests

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

TEST_COLUMNS = ("method", "statistic", "critical_value", "p_value", "reject", "alpha", "df")
VARIABLE_COLUMNS = ("name", "theta_hat", "sigma_hat", "z", "n_j", "n_j_plus", "n_j_minus",
                    "h_plus", "h_minus", "f_plus", "f_minus", "theta_rbc")
STUDY_COLUMNS = ("model", "param", "n", "reps", "alpha", "method", "reject_rate", "failures", "seed")
POWER_COLUMNS = ("framework", "d", "k", "method", "power", "draws", "seed")

# null-size grid used by ``simulate --full-study``
FULL_STUDY_D = (2, 3, 4)
FULL_STUDY_N = (500, 2000, 5000)


def _split(text: str | None) -> list[str]:
    if text is None:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def _floats(text: str | None, name: str) -> list[float]:
    out = []
    for tok in _split(text):
        try:
            out.append(float(tok))
        except ValueError:
            raise ConfigError(f"--{name}: {tok!r} is not a number") from None
    return out


def _one_bandwidth(tok: str) -> BandwidthSpec:
    if tok.lower() == "auto":
        return BandwidthSpec()
    try:
        return BandwidthSpec.fixed(float(tok))
    except (ValueError, DomainError):
        raise ConfigError(f"--bandwidth: {tok!r} is neither 'auto' nor a positive number") from None


def parse_bandwidth(text: str | None, d: int):
    """``auto``, a number, or one comma-separated entry per variable where an
    entry may be ``minus:plus``. A single entry applies to every variable."""
    entries = _split(text) or ["auto"]
    if len(entries) not in (1, d):
        raise ConfigError(f"--bandwidth: {len(entries)} entries for {d} running variables")
    specs = []
    for tok in entries:
        if ":" in tok:
            minus, plus = tok.split(":", 1)
            specs.append((_one_bandwidth(minus.strip()), _one_bandwidth(plus.strip())))
        else:
            specs.append(_one_bandwidth(tok))
    if len(specs) == 1 and not isinstance(specs[0], tuple):
        return specs[0]
    return specs * d if len(specs) == 1 else specs


@dataclass
class RunConfig:
    input: str
    variables: tuple[str, ...] = ()
    cutoffs: tuple[float, ...] = ()
    directions: tuple[str, ...] = ()
    alpha: float = 0.05
    methods: tuple[str, ...] = METHODS
    kernel: str = "triangular"
    bandwidth: str = "auto"
    seed: int = DEFAULT_SEED
    format: str = "text"
    dropped: int = field(default=0, compare=False)

    def validate(self, d: int) -> None:
        check_alpha(self.alpha)
        if self.kernel not in KERNELS:
            raise ConfigError(f"--kernel: unknown kernel {self.kernel!r}; choose from {sorted(KERNELS)}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"--methods: unknown or empty {bad}; choose from {list(METHODS)}")
        if len(self.cutoffs) not in (0, d):
            raise ConfigError(f"--cutoffs: {len(self.cutoffs)} values for {d} running variables")
        if len(self.directions) not in (0, d):
            raise ConfigError(f"--directions: {len(self.directions)} values for {d} running variables")

    def cutoff_spec(self, d: int) -> CutoffSpec:
        cutoffs = self.cutoffs or (0.0,) * d
        directions = self.directions or ("treated_above",) * d
        return CutoffSpec(cutoffs, directions)


def ingest_csv(path: str, variables: Sequence[str] = (), warn=None) -> tuple[Dataset, int]:
    """Read the selected columns of a headed CSV file.

    Rows whose selected cells are missing, non-numeric or non-finite are
    dropped; the count is reported through ``warn`` and returned.
    """
    warn = warn or (lambda msg: print(f"warning: {msg}", file=sys.stderr))
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise EmptyData(f"{path}: no header row")
            header = [h.strip() for h in header]
            names = list(variables) or header
            missing = [v for v in names if v not in header]
            if missing:
                raise ConfigError(f"--vars: column(s) {missing} not in header {header}")
            idx = [header.index(v) for v in names]
            rows, dropped = [], 0
            for rec in reader:
                if not rec or all(not c.strip() for c in rec):
                    continue
                try:
                    vals = [float(rec[i]) for i in idx]
                except (ValueError, IndexError):
                    dropped += 1
                    continue
                if all(math.isfinite(v) for v in vals):
                    rows.append(vals)
                else:
                    dropped += 1
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    except csv.Error as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from None
    if dropped:
        warn(f"dropped {dropped} row(s) with missing or non-numeric values")
    if not rows:
        raise EmptyData(f"{path}: no usable rows")
    return Dataset(np.array(rows), tuple(names)), dropped


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

def _num(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def build_report(config: RunConfig, dataset: Dataset, results) -> dict:
    stats = next((r.per_variable for r in results.values() if r.per_variable), ())
    variables = []
    for s in stats:
        rec = s.to_dict()
        row = {"name": dataset.variable_names[s.j]}
        row.update({k: _num(rec[k]) for k in VARIABLE_COLUMNS[1:]})
        variables.append(row)
    tests = [{k: _num(v) if k != "method" else v for k, v in r.to_dict().items()} for r in results.values()]
    return {
        "input": config.input,
        "n": dataset.n,
        "dropped_rows": config.dropped,
        "alpha": config.alpha,
        "kernel": config.kernel,
        "bandwidth": config.bandwidth,
        "variables": variables,
        "tests": tests,
    }


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def render_text(report: dict) -> str:
    out = [f"input: {report['input']}  n = {report['n']}  dropped = {report['dropped_rows']}",
           f"alpha = {_fmt(report['alpha'])}  kernel = {report['kernel']}  bandwidth = {report['bandwidth']}"]
    if report["variables"]:
        out.append("")
        out.append("  ".join(VARIABLE_COLUMNS))
        for row in report["variables"]:
            out.append("  ".join(_fmt(row[k]) for k in VARIABLE_COLUMNS))
    out.append("")
    out.append("  ".join(TEST_COLUMNS))
    for row in report["tests"]:
        out.append("  ".join(_fmt(row[k]) for k in TEST_COLUMNS))
    return "\n".join(out) + "\n"


def render_rows(rows: list[dict], columns: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{k: r[k] for k in columns} for r in rows], indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([repr(r[k]) if isinstance(r[k], float) else _fmt(r[k]) for k in columns])
        return buf.getvalue()
    widths = {k: max(len(k), *(len(_fmt(r[k])) for r in rows)) if rows else len(k) for k in columns}
    lines = ["  ".join(k.ljust(widths[k]) for k in columns)]
    for r in rows:
        lines.append("  ".join(_fmt(r[k]).ljust(widths[k]) for k in columns))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_test(args) -> str:
    config = RunConfig(
        input=args.input,
        variables=tuple(_split(args.vars)),
        cutoffs=tuple(_floats(args.cutoffs, "cutoffs")),
        directions=tuple(_split(args.directions)),
        alpha=args.alpha,
        methods=tuple(m.upper() for m in _split(args.methods)) or METHODS,
        kernel=args.kernel,
        bandwidth=args.bandwidth,
        seed=args.seed,
        format=args.format,
    )
    check_alpha(config.alpha)
    raw, config.dropped = ingest_csv(config.input, config.variables)
    config.validate(raw.d)
    data = center(raw, config.cutoff_spec(raw.d))
    bw = parse_bandwidth(config.bandwidth, raw.d)
    stats = None
    if any(m in ("MT", "MTMAX", "BCT") for m in config.methods):
        stats = marginal_stats(data, bw, config.kernel)
    results = run_tests(data, config.methods, config.alpha, stats, bw, config.kernel)
    report = build_report(config, data, results)
    if config.format == "json":
        return json.dumps(report, indent=2) + "\n"
    if config.format == "csv":
        return render_rows(report["tests"], TEST_COLUMNS, "csv")
    return render_text(report)


def _study_models(args) -> list[ModelSpec]:
    if args.full_study:
        return [ModelSpec(kind, d) for kind in ("model1", "model2") for d in FULL_STUDY_D]
    if args.model in ("model3", "model4"):
        if args.gamma is None:
            raise ConfigError(f"--gamma is required for {args.model}")
        return [ModelSpec(args.model, 2, args.gamma)]
    return [ModelSpec(args.model, args.d)]


def cmd_simulate(args) -> str:
    methods = tuple(m.upper() for m in _split(args.methods)) or METHODS
    sizes = FULL_STUDY_N if args.full_study else (args.n,)
    rows = []
    for model in _study_models(args):
        for n in sizes:
            config = SimConfig(n=n, reps=args.reps, alpha=args.alpha, seed=args.seed, methods=methods)
            rows.extend(run_rejection_study(model, config, workers=args.workers).rows())
    return render_rows(rows, STUDY_COLUMNS, args.format)


def cmd_power(args) -> str:
    ds = [int(v) for v in _floats(args.d, "d")]
    ks = _floats(args.k, "k")
    if not ds or not ks:
        raise ConfigError("--d and --k need at least one value")
    methods = tuple(m.upper() for m in _split(args.methods)) or POWER_METHODS
    bad = [m for m in methods if m not in POWER_METHODS]
    if bad:
        raise ConfigError(f"--methods: local power is defined for {list(POWER_METHODS)}, got {bad}")
    if args.draws < 1:
        raise ConfigError("--draws must be positive")
    table = PowerTable.compute(args.framework, ds, ks, args.alpha, args.draws, args.seed, methods)
    return render_rows(table.rows, POWER_COLUMNS, args.format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrddtest", description="Manipulation tests for multi-score RDD.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format):
        p.add_argument("--alpha", type=float, default=0.05, help="nominal level")
        p.add_argument("--methods", default=None, help="comma-separated subset of the available methods")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
        p.add_argument("--format", choices=("text", "json", "csv"), default=default_format)
        p.add_argument("--output", default=None, help="write results here instead of stdout")

    t = sub.add_parser("test", help="test a CSV dataset for manipulation")
    t.add_argument("--input", required=True, help="CSV file with a header row")
    t.add_argument("--vars", default=None, help="comma-separated running-variable columns (default: all)")
    t.add_argument("--cutoffs", default=None, help="comma-separated cutoffs (default: 0)")
    t.add_argument("--directions", default=None,
                   help="comma-separated treated_above|treated_below (aliases above, below)")
    t.add_argument("--kernel", default="triangular", help=f"one of {', '.join(sorted(KERNELS))}")
    t.add_argument("--bandwidth", default="auto",
                   help="'auto', a number, or one entry per variable; an entry may be minus:plus")
    common(t, "text")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="rejection-rate study on a simulation design")
    s.add_argument("--model", choices=MODEL_KINDS, default="model1")
    s.add_argument("--d", type=int, default=2, help="number of running variables (models 1 and 2)")
    s.add_argument("--gamma", type=float, default=None, help="manipulation share (models 3 and 4)")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")
    s.add_argument("--full-study", action="store_true",
                   help="models 1 and 2 over d in {2,3,4} and n in {500,2000,5000}")
    common(s, "csv")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("power", help="local asymptotic power curves")
    w.add_argument("--framework", type=int, choices=(1, 2), default=1)
    w.add_argument("--d", default="2,5,8", help="comma-separated dimensions")
    w.add_argument("--k", default="0,0.5,1,1.5,2,2.5,3,3.5,4", help="comma-separated local alternatives")
    w.add_argument("--draws", type=int, default=1_000_000)
    common(w, "csv")
    w.set_defaults(func=cmd_power)
    w.set_defaults(alpha=0.1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MrddError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
