"""Regret ratios of the MD baseline relative to LpD on the nine simulated problems.

    python scripts/run_simulation.py --reps 20 --out simulation.csv
"""

import argparse
import time

from lpdepth.harness import SimConfig, run_table1_experiment, table1_problems


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=SimConfig.QUICK_REPS)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--problems", help="comma separated names (default: all)")
    ap.add_argument("--out", help="CSV report path")
    args = ap.parse_args()

    probs = table1_problems()
    if args.problems:
        wanted = args.problems.split(",")
        probs = [p for p in probs if p.name in wanted]
    t0 = time.perf_counter()
    report = run_table1_experiment(SimConfig(tuple(probs), n_reps=args.reps, seed=args.seed))
    print(report.to_text())
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_csv())


if __name__ == "__main__":
    main()
