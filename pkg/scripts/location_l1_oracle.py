"""Regret on the l1 location problem for LpD, MD and an oracle depth rule.

The oracle uses the true exponent and transform with estimated centres, so
it bounds what any estimated-geometry maximum-depth rule can achieve.

    python scripts/location_l1_oracle.py --reps 20
"""

import argparse

import numpy as np

from lpdepth.classify import train_max_depth
from lpdepth.core import LpModel, depth
from lpdepth.fit import MD_GRID
from lpdepth.harness import rep_rng, table1_problems
from lpdepth.synth import bayes_risk_mc, sample_lp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--problem", default="location-1")
    args = ap.parse_args()

    prob = next(p for p in table1_problems() if p.name == args.problem).problem
    bayes, se = bayes_risk_mc(prob, 200_000, np.random.default_rng(1))
    rates = {"oracle": [], "LpD": [], "MD": []}
    for rep in range(args.reps):
        rng = rep_rng(0, rep)
        tr = [sample_lp(s, 200, rng) for s in (prob.spec_a, prob.spec_b)]
        te = np.vstack([sample_lp(s, 500, rng) for s in (prob.spec_a, prob.spec_b)])
        y = np.repeat([0, 1], 500)
        models = [LpModel(s.p, x.mean(0), s.A) for s, x in zip((prob.spec_a, prob.spec_b), tr)]
        rates["oracle"].append(np.mean((depth(te, models[1]) > depth(te, models[0])) != y))
        for name, grid in (("LpD", None), ("MD", MD_GRID)):
            kw = {} if grid is None else {"grid": grid}
            clf = train_max_depth(tr, rng=rep_rng(0, rep, 1), **kw)
            rates[name].append(np.mean(clf.predict_index(te) != y))
    print(f"Bayes risk {bayes:.4f} (mc se {se:.4f})")
    for name, r in rates.items():
        r = np.asarray(r)
        print(f"{name:>7}: mean regret {r.mean() - bayes:.4f}  (sd of rate {r.std(ddof=1):.4f})")


if __name__ == "__main__":
    main()
