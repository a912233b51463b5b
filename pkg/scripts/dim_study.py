"""Accuracy of DLM[a_kj b_k] on the dim_study simulation as p grows."""
import argparse
import time
import warnings

import numpy as np

from fisherem import FitConfig
from fisherem.driver import best_of, clustering_accuracy
from fisherem.simulate import preset, simulate_dlm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[5, 25, 50, 100])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--n-init", type=int, default=10)
    ap.add_argument("--init", default="kmeans", choices=["random_partition", "kmeans", "pca_params"])
    args = ap.parse_args()
    warnings.simplefilter("ignore")

    print("p      mean    sd   seconds")
    for p in args.dims:
        t = time.perf_counter()
        accs = []
        for s in range(args.reps):
            D, lab = simulate_dlm(preset("dim_study", p=p, seed=s))
            res = best_of(D, FitConfig(model="akj_bk", K=3, d=2, n_init=args.n_init, init_method=args.init, seed=s))
            accs.append(clustering_accuracy(res.labels, lab))
        print(f"{p:<5d} {np.mean(accs):.3f} {np.std(accs):.3f} {time.perf_counter() - t:8.1f}")


if __name__ == "__main__":
    main()
