"""Rejection rates of every method as the manipulated share grows, for
Model 3 (opposite-direction manipulation) and Model 4 (one-sided).

    python3 scripts/run_manipulation_power.py --reps 500 --out results/manipulation.csv
"""

import argparse
import os
from pathlib import Path

import numpy as np

from mrddtest.cli import STUDY_COLUMNS, render_rows
from mrddtest.montecarlo import DEFAULT_SEED, SimConfig, model3, model4, run_rejection_study


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--reps", type=int, default=500)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--gammas", type=float, nargs="+", default=list(np.round(np.arange(0.0, 1.01, 0.1), 2)))
    parser.add_argument("--models", nargs="+", choices=("model3", "model4"), default=["model3", "model4"])
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out", default="results/manipulation.csv")
    args = parser.parse_args()

    factory = {"model3": model3, "model4": model4}
    cfg = SimConfig(n=args.n, reps=args.reps, alpha=args.alpha, seed=args.seed)
    rows = []
    for kind in args.models:
        for g in args.gammas:
            res = run_rejection_study(factory[kind](float(g)), cfg, args.workers)
            rows.extend(res.rows())
            print(kind, f"gamma={g:g}", " ".join(f"{m}={r:.3f}" for m, r in res.rates.items()), flush=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_rows(rows, STUDY_COLUMNS, "csv"))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
