"""Rejection rates under the null for Models 1 and 2 over d and n.

    python3 scripts/run_null_size.py --reps 1000 --workers 8 --out results/null_size.csv
"""

import argparse
import os
from pathlib import Path

from mrddtest.cli import STUDY_COLUMNS, render_rows
from mrddtest.montecarlo import DEFAULT_SEED, ModelSpec, SimConfig, run_rejection_study


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--reps", type=int, default=1000)
    parser.add_argument("--ns", type=int, nargs="+", default=[500, 2000, 5000])
    parser.add_argument("--ds", type=int, nargs="+", default=[2, 3, 4])
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out", default="results/null_size.csv")
    args = parser.parse_args()

    rows = []
    for kind in ("model1", "model2"):
        for d in args.ds:
            for n in args.ns:
                cfg = SimConfig(n=n, reps=args.reps, alpha=args.alpha, seed=args.seed)
                res = run_rejection_study(ModelSpec(kind, d), cfg, args.workers)
                rows.extend(res.rows())
                print(kind, f"d={d}", f"n={n}", " ".join(f"{m}={r:.3f}" for m, r in res.rates.items()), flush=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_rows(rows, STUDY_COLUMNS, "csv"))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
