"""Initial partitions for Fisher-EM: random, k-means, and PCA-simulated parameters."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from .model import SoftPartition, as_matrix

MAX_ATTEMPTS = 1000


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_partition(n: int, K: int, seed=None) -> SoftPartition:
    """Uniform one-hot assignment, redrawn until no group is empty."""
    if n < K:
        raise ValueError(f"cannot split {n} observations into {K} non-empty groups")
    rng = _rng(seed)
    for _ in range(MAX_ATTEMPTS):
        labels = rng.integers(0, K, size=n)
        if np.unique(labels).size == K:
            return SoftPartition.from_labels(labels, K)
    raise RuntimeError(f"no partition with {K} non-empty groups after {MAX_ATTEMPTS} draws")


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    sse_trace: list


def _assign(Y, centers):
    d2 = ((Y[:, None, :] - centers[None]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(Y.shape[0]), labels]


def _reseed_empty(labels, dist, K):
    for k in range(K):
        if np.any(labels == k):
            continue
        sizes = np.bincount(labels, minlength=K)
        movable = np.where(sizes[labels] > 1, dist, -np.inf)
        far = int(np.argmax(movable))
        labels[far] = k
        dist[far] = 0.0


def lloyd(data, K: int, seed=None, max_iter: int = 50) -> KMeansResult:
    """Lloyd's algorithm started from K distinct observations.

    An emptied cluster is moved onto the observation farthest from its
    current center.  ``sse_trace`` records the within-cluster sum of
    squares after each assignment step.
    """
    Y = as_matrix(data)
    n = Y.shape[0]
    if n < K:
        raise ValueError(f"need at least {K} observations, got {n}")
    rng = _rng(seed)
    centers = Y[rng.choice(n, size=K, replace=False)].copy()
    labels, dist = _assign(Y, centers)
    trace = [float(dist.sum())]
    for _ in range(max_iter):
        _reseed_empty(labels, dist, K)
        centers = np.stack([Y[labels == k].mean(axis=0) for k in range(K)])
        new_labels, dist = _assign(Y, centers)
        trace.append(float(dist.sum()))
        done = np.array_equal(new_labels, labels)
        labels = new_labels
        if done:
            break
    _reseed_empty(labels, dist, K)
    return KMeansResult(labels, centers, trace)


def kmeans(data, K: int, seed=None, max_iter: int = 50) -> SoftPartition:
    """Hard k-means partition (squared Euclidean distance, raw features)."""
    return SoftPartition.from_labels(lloyd(data, K, seed, max_iter).labels, K)


def pca_param_init(data, K: int, d: int, seed=None) -> SoftPartition:
    """Posteriors of a mixture simulated in a PCA latent space.

    The data are projected on their first d principal components and
    whitened.  K means are drawn from the empirical distribution of the
    whitened scores, N(0, I); components are isotropic with variance 1/K
    and equal proportions.  The initial partition is the posterior of that
    mixture.  Draws leaving a group with total mass below one are repeated.
    """
    Y = as_matrix(data)
    n, p = Y.shape
    if not 1 <= d <= p:
        raise ValueError(f"need 1 <= d <= p, got d={d}, p={p}")
    rng = _rng(seed)
    if K == 1:
        return SoftPartition(np.ones((n, 1)))
    Yc = Y - Y.mean(axis=0)
    _, s, Vt = np.linalg.svd(Yc, full_matrices=False)
    var = s[:d] ** 2 / n
    if var.size < d or var.min() <= 1e-12 * max(var.max(), np.finfo(float).tiny):
        warnings.warn("degenerate principal subspace; falling back to a random partition",
                      RuntimeWarning, stacklevel=2)
        return random_partition(n, K, rng)
    Z = (Yc @ Vt[:d].T) / np.sqrt(var)
    comp_var = 1.0 / K
    for _ in range(MAX_ATTEMPTS):
        means = rng.standard_normal((K, d))
        d2 = ((Z[:, None, :] - means[None]) ** 2).sum(axis=2)
        T = softmax(-0.5 * d2 / comp_var, axis=1)
        T = T / T.sum(axis=1, keepdims=True)
        if T.sum(axis=0).min() >= 1.0:
            return SoftPartition(T)
    warnings.warn("simulated parameters kept emptying a group; falling back to a random partition",
                  RuntimeWarning, stacklevel=2)
    return random_partition(n, K, rng)


INITIALIZERS = ("random_partition", "kmeans", "pca_params", "user_partition")


def initial_partition(method: str, data, K: int, d: int, seed=None) -> SoftPartition:
    Y = as_matrix(data)
    if method == "random_partition":
        return random_partition(Y.shape[0], K, seed)
    if method == "kmeans":
        return kmeans(Y, K, seed)
    if method == "pca_params":
        return pca_param_init(Y, K, d, seed)
    raise ValueError(f"unknown init method {method!r}; expected one of {INITIALIZERS[:3]}")
