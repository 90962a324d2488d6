"""How often the fitted exponent recovers the true p on exponential-power samples.

    python scripts/p_recovery.py --n 2000 --seeds 20 --p0 1,2,4
"""

import argparse
from collections import Counter

import numpy as np

from lpdepth.fit import NO_ORIENTATION, OrientationSearch, fit_class
from lpdepth.synth import LpSymmetricSpec, rotation, sample_lp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--p0", default="1,2,4")
    ap.add_argument("--rot", type=float, default=0.0, help="rotation of the true unit ball, degrees")
    ap.add_argument("--no-orientation", action="store_true", help="plain TR root, no rotation search")
    args = ap.parse_args()

    search = NO_ORIENTATION if args.no_orientation else OrientationSearch()
    A = rotation(np.radians(args.rot)).T
    for p0 in (float(v) for v in args.p0.split(",")):
        spec = LpSymmetricSpec(p0, [0.0, 0.0], A)
        picks = Counter()
        for seed in range(args.seeds):
            rng = np.random.default_rng(seed)
            picks[round(fit_class(sample_lp(spec, args.n, rng), rng, search=search).model.p, 3)] += 1
        hits = picks[round(p0, 3)]
        print(f"p0={p0:g}: exact {hits}/{args.seeds}  picks {dict(sorted(picks.items()))}")


if __name__ == "__main__":
    main()
