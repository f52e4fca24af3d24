"""How often a single seeded k-means run lands in the good basin on the phantom,
and how many restarts make the lowest-objective pick reliable.

    python scripts/kmeans_restarts.py --seeds 20
"""

import argparse

import numpy as np

from candleseg.clustering import KMeansOptions, feature_matrix, kmeans
from candleseg.colorspace import rgb_to_lab
from candleseg.phantom import make_phantom


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--restarts", type=int, nargs="+", default=[1, 2, 5, 10])
    ap.add_argument("--width", type=int, default=291)
    ap.add_argument("--height", type=int, default=389)
    args = ap.parse_args()

    feats = feature_matrix(rgb_to_lab(make_phantom(args.width, args.height).image))
    # the best objective over every run serves as the reference optimum
    runs = {
        n: [kmeans(feats, 3, seed=s, opts=KMeansOptions(n_init=n)).objective for s in range(args.seeds)]
        for n in args.restarts
    }
    best = min(min(v) for v in runs.values())
    print(f"reference objective {best:.1f}")
    print(f"{'n_init':>6} {'hit rate':>9} {'worst / best':>13}")
    for n, objs in runs.items():
        objs = np.array(objs)
        hits = np.mean(objs <= best * (1 + 1e-6))
        print(f"{n:>6} {hits:>9.2f} {objs.max() / best:>13.2f}")


if __name__ == "__main__":
    main()
