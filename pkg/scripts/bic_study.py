"""BIC model and K selection on the bic_study simulation (12 models x K = 2..6)."""
import argparse
import warnings
from collections import Counter

import numpy as np

from fisherem import FitConfig
from fisherem.model import all_models
from fisherem.selection import grid_select
from fisherem.simulate import preset, simulate_dlm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--n-init", type=int, default=3)
    ap.add_argument("--k-max", type=int, default=6)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--table", action="store_true", help="print the BIC table of every replicate")
    args = ap.parse_args()
    warnings.simplefilter("ignore")

    models = all_models()
    Ks = list(range(2, args.k_max + 1))
    picks = []
    for s in range(args.reps):
        D, _ = simulate_dlm(preset("bic_study", seed=s))
        sel = grid_select(D, models, Ks, cfg=FitConfig(n_init=args.n_init, init_method="kmeans", seed=s),
                          jobs=args.jobs)
        picks.append((sel.best_model.name, sel.best_K))
        print(f"replicate {s}: {sel.best_model.name}, K={sel.best_K}")
        if args.table:
            M = sel.matrix()
            print("        " + "".join(f"{'K=' + str(k):>10s}" for k in Ks))
            for m, row in zip(models, M):
                print(f"{m.name:<8s}" + "".join(f"{v:10.1f}" if np.isfinite(v) else f"{'-':>10s}" for v in row))
    print("chosen K:", dict(Counter(K for _, K in picks)))
    print("chosen model:", dict(Counter(m for m, _ in picks)))


if __name__ == "__main__":
    main()
