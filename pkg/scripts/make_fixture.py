"""Write the CSV fixtures used by the CLI tests.

tests/data/model1_n5000.csv        Model 1, d = 2, n = 5000 (no manipulation)
tests/data/municipalities.csv      synthetic population / HDI scores with
                                   cutoffs 30000 and 0.7, treated below both
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from mrddtest.montecarlo import DEFAULT_SEED, generate, model1, rep_stream

FIXTURE_SEED = DEFAULT_SEED


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def municipalities(n: int, rng: np.random.Generator) -> np.ndarray:
    # smooth densities through both cutoffs
    population = np.exp(rng.normal(np.log(30000.0), 0.8, n))
    hdi = np.clip(rng.normal(0.7, 0.07, n), 0.3, 0.99)
    return np.column_stack([np.round(population), np.round(hdi, 4)])


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "data"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ds = generate(model1(2), 5000, rep_stream(FIXTURE_SEED, 0))
    write_csv(out / "model1_n5000.csv", ("z1", "z2"), ds.data)
    rng = np.random.default_rng(FIXTURE_SEED)
    write_csv(out / "municipalities.csv", ("population", "hdi"), municipalities(6000, rng))
    print(f"wrote fixtures to {out}")


if __name__ == "__main__":
    main()
