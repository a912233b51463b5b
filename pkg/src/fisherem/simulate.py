"""Synthetic data drawn from DLM models, including the two benchmark designs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Dataset, as_model, expand_beta, expand_sigma, sigma_shape


def random_orthogonal(p: int, seed=None) -> np.ndarray:
    """Haar-distributed p x p orthogonal matrix (QR of a Gaussian matrix, signs fixed)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def simplex_means(K: int, d: int, scale: float = 3.0) -> np.ndarray:
    """Vertices of a regular simplex centered at 0, each at distance ``scale``.

    Needs ``d >= K-1``; extra coordinates are zero.
    """
    if d < K - 1:
        raise ValueError(f"a {K}-vertex simplex needs d >= {K - 1}")
    E = np.eye(K) - 1.0 / K
    # orthonormal basis of the sum-zero hyperplane
    basis = np.linalg.svd(E)[2][: K - 1].T if K > 1 else np.zeros((1, 0))
    V = E @ basis
    if K > 1:
        V *= scale / np.linalg.norm(V[0])
    out = np.zeros((K, d))
    out[:, : K - 1] = V
    return out


@dataclass
class SimSpec:
    model: object
    K: int
    p: int
    d: int
    group_sizes: list
    latent_means: np.ndarray
    latent_variances: object
    noise_variances: object
    seed: Optional[int] = 0
    orientation: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.model = as_model(self.model)
        self.group_sizes = [int(s) for s in self.group_sizes]
        self.latent_means = np.asarray(self.latent_means, dtype=float).reshape(self.K, self.d)
        self.latent_variances = np.asarray(self.latent_variances, dtype=float)
        self.noise_variances = np.asarray(self.noise_variances, dtype=float)
        self.check()

    def check(self):
        K, p, d = self.K, self.p, self.d
        if not 1 <= d < p:
            raise ValueError(f"need 1 <= d < p, got d={d}, p={p}")
        if len(self.group_sizes) != K or min(self.group_sizes) < 1:
            raise ValueError("group_sizes must hold K positive counts")
        if self.latent_variances.shape != sigma_shape(self.model, K, d):
            raise ValueError(f"latent_variances for {self.model} must have shape "
                             f"{sigma_shape(self.model, K, d)}, got {self.latent_variances.shape}")
        want = (K,) if self.model.noise.per_group else ()
        if self.noise_variances.shape != want:
            raise ValueError(f"noise_variances must have shape {want}")
        for S in expand_sigma(self.model, self.latent_variances, K, d):
            if np.linalg.eigvalsh((S + S.T) / 2).min() <= 0:
                raise ValueError("latent variances must be positive (definite)")
        if np.any(self.noise_variances < 0):
            raise ValueError("noise variances must be non-negative")
        if self.orientation is not None:
            W = np.asarray(self.orientation, dtype=float)
            if W.shape != (p, p) or np.abs(W.T @ W - np.eye(p)).max() > 1e-8:
                raise ValueError("orientation must be a p x p orthogonal matrix")

    @property
    def n(self) -> int:
        return sum(self.group_sizes)

    def to_dict(self) -> dict:
        return {
            "model": self.model.name, "K": self.K, "p": self.p, "d": self.d,
            "group_sizes": self.group_sizes, "latent_means": self.latent_means.tolist(),
            "latent_variances": self.latent_variances.tolist(),
            "noise_variances": self.noise_variances.tolist(), "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "SimSpec":
        keys = ("model", "K", "p", "d", "group_sizes", "latent_means", "latent_variances",
                "noise_variances")
        missing = [k for k in keys if k not in spec]
        if missing:
            raise ValueError(f"simulation spec is missing {missing}")
        return cls(**{k: spec[k] for k in keys}, seed=spec.get("seed", 0))


def simulate_dlm(spec: SimSpec) -> tuple[Dataset, np.ndarray]:
    """Draw a dataset and its group labels from ``spec``.

    Group k points are ``W [x; e]`` with ``x ~ N(mu_k, Sigma_k)`` in d
    dimensions and ``e ~ N(0, beta_k I)`` in the remaining p-d; ``W`` is
    ``spec.orientation`` or a random orthogonal matrix from the seed.
    """
    rng = np.random.default_rng(spec.seed)
    K, p, d = spec.K, spec.p, spec.d
    W = random_orthogonal(p, rng) if spec.orientation is None else np.asarray(spec.orientation, float)
    sigmas = expand_sigma(spec.model, spec.latent_variances, K, d)
    betas = expand_beta(spec.model, spec.noise_variances, K)
    blocks, labels = [], []
    for k, n_k in enumerate(spec.group_sizes):
        x = rng.multivariate_normal(spec.latent_means[k], sigmas[k], size=n_k, method="cholesky")
        e = rng.standard_normal((n_k, p - d)) * np.sqrt(betas[k])
        blocks.append(np.hstack([x, e]) @ W.T)
        labels.append(np.full(n_k, k))
    return Dataset(np.vstack(blocks)), np.concatenate(labels)


DIM_STUDY_SIZES = (300, 200, 100)
DIM_STUDY_NOISE = (1.0, 1.25, 1.5)
BIC_STUDY_LATENT = (1.0, 0.5, 1.5, 0.75)
BIC_STUDY_NOISE = 1.0


def preset(name: str, p: Optional[int] = None, seed: Optional[int] = 0) -> SimSpec:
    """Benchmark designs.

    ``dim_study``: 600 points in 3 unbalanced groups (300/200/100) from
    ``akj_bk`` with a 2-dimensional latent space, p given by the caller.
    ``bic_study``: 4 groups of 75 points from ``ak_b`` in a 3-dimensional
    latent space completed to p = 50.
    Latent means sit on a regular simplex of radius 3.
    """
    key = name.replace("-", "_")
    if key == "dim_study":
        p = 50 if p is None else int(p)
        K, d = 3, 2
        return SimSpec("akj_bk", K, p, d, list(DIM_STUDY_SIZES), simplex_means(K, d),
                       np.ones((K, d)), np.array(DIM_STUDY_NOISE), seed=seed)
    if key == "bic_study":
        p = 50 if p is None else int(p)
        K, d = 4, 3
        return SimSpec("ak_b", K, p, d, [75] * K, simplex_means(K, d),
                       np.array(BIC_STUDY_LATENT), np.array(BIC_STUDY_NOISE), seed=seed)
    raise ValueError(f"unknown preset {name!r}; expected 'dim_study' or 'bic_study'")
