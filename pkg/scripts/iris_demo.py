"""Cluster iris with DLM[a_k b] and compare the first axis with supervised LDA."""
import argparse
from pathlib import Path

import numpy as np
from scipy import linalg

from fisherem import FitConfig
from fisherem.driver import best_of, clustering_accuracy
from fisherem.io import read_dataset, read_labels

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"


def lda_axis(Y, y):
    m = Y.mean(axis=0)
    S = np.cov(Y.T, bias=True)
    SB = sum(np.mean(y == g) * np.outer(Y[y == g].mean(0) - m, Y[y == g].mean(0) - m) for g in np.unique(y))
    return linalg.eigh(SB, S)[1][:, -1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-init", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = read_dataset(DATA / "iris.csv")
    y = read_labels(DATA / "iris_labels.csv")
    res = best_of(ds.Y, FitConfig(model="ak_b", K=3, d=2, n_init=args.n_init, seed=args.seed))
    v = lda_axis(ds.Y, y)
    u = res.params.U[:, 0]
    print(f"log-likelihood {res.loglik:.2f} after {res.n_iter} iterations ({res.reason})")
    print(f"accuracy {clustering_accuracy(res.labels, y):.3f}")
    print(f"|cos(u1, lda)| {abs(u @ v) / np.linalg.norm(v):.4f}")
    print("loadings")
    for name, row in zip(ds.names, res.params.U):
        print(f"  {name:>14s} " + " ".join(f"{x:+.3f}" for x in row))


if __name__ == "__main__":
    main()
