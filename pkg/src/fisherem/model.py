"""The discriminative latent mixture (DLM) family and its parameter container.

A DLM component ``k`` lives in a d-dimensional subspace spanned by the
orthonormal columns of ``U`` (p x d, shared by all groups).  Its latent
covariance is ``Sigma_k`` and the variance outside the subspace is the
scalar ``beta_k``.  The 12 members of the family differ in how ``Sigma_k``
and ``beta_k`` are constrained across groups.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

VAR_FLOOR = 1e-10


class LatentVariance(enum.Enum):
    FULL_GROUP = "sk"  # Sigma_k
    FULL_COMMON = "s"  # Sigma
    DIAG_GROUP = "akj"  # alpha_kj
    ISO_GROUP = "ak"  # alpha_k
    DIAG_COMMON = "aj"  # alpha_j
    ISO_COMMON = "a"  # alpha

    @property
    def per_group(self) -> bool:
        return self in (LatentVariance.FULL_GROUP, LatentVariance.DIAG_GROUP, LatentVariance.ISO_GROUP)

    @property
    def full(self) -> bool:
        return self in (LatentVariance.FULL_GROUP, LatentVariance.FULL_COMMON)

    @property
    def isotropic(self) -> bool:
        return self in (LatentVariance.ISO_GROUP, LatentVariance.ISO_COMMON)


class NoiseVariance(enum.Enum):
    GROUP = "bk"  # beta_k
    COMMON = "b"  # beta

    @property
    def per_group(self) -> bool:
        return self is NoiseVariance.GROUP


_LATEX = {
    "sk": "Sigma_k", "s": "Sigma", "akj": "alpha_kj", "ak": "alpha_k", "aj": "alpha_j", "a": "alpha",
    "bk": "beta_k", "b": "beta",
}


@dataclass(frozen=True)
class ModelSpec:
    latent: LatentVariance
    noise: NoiseVariance

    @property
    def name(self) -> str:
        """Short code such as ``ak_b``."""
        return f"{self.latent.value}_{self.noise.value}"

    @property
    def label(self) -> str:
        return f"DLM[{_LATEX[self.latent.value]} {_LATEX[self.noise.value]}]"

    @classmethod
    def from_name(cls, name: str) -> "ModelSpec":
        try:
            lat, noi = name.strip().lower().split("_")
            return cls(LatentVariance(lat), NoiseVariance(noi))
        except ValueError:
            valid = ", ".join(m.name for m in all_models())
            raise ValueError(f"unknown model {name!r}; expected one of {valid}") from None

    def __str__(self) -> str:
        return self.name


def all_models() -> list[ModelSpec]:
    """The 12 DLM models, ordered from the most to the least parametrized."""
    return [ModelSpec(lat, noi) for lat, noi in itertools.product(LatentVariance, NoiseVariance)]


def as_model(model) -> ModelSpec:
    return model if isinstance(model, ModelSpec) else ModelSpec.from_name(str(model))


def param_count(model, K: int, p: int, d: int) -> int:
    """Number of free parameters of a DLM model.

    The orientation costs ``d*p - d(d+1)/2`` because of the orthonormality
    constraints on ``U``.  For ``d = K-1`` this gives the usual table values
    (e.g. 337 for ``sk_bk`` with K=4, p=100).
    """
    model = as_model(model)
    if not (1 <= d <= K - 1 <= p - 1):
        raise ValueError(f"need 1 <= d <= K-1 <= p-1, got K={K}, p={p}, d={d}")
    latent = {
        LatentVariance.FULL_GROUP: K * d * (d + 1) // 2,
        LatentVariance.FULL_COMMON: d * (d + 1) // 2,
        LatentVariance.DIAG_GROUP: K * d,
        LatentVariance.ISO_GROUP: K,
        LatentVariance.DIAG_COMMON: d,
        LatentVariance.ISO_COMMON: 1,
    }[model.latent]
    noise = K if model.noise.per_group else 1
    return (K - 1) + K * d + (d * p - d * (d + 1) // 2) + latent + noise


def sigma_shape(model, K: int, d: int) -> tuple:
    model = as_model(model)
    return {
        LatentVariance.FULL_GROUP: (K, d, d),
        LatentVariance.FULL_COMMON: (d, d),
        LatentVariance.DIAG_GROUP: (K, d),
        LatentVariance.ISO_GROUP: (K,),
        LatentVariance.DIAG_COMMON: (d,),
        LatentVariance.ISO_COMMON: (),
    }[model.latent]


def expand_sigma(model, sigma, K: int, d: int) -> np.ndarray:
    """Broadcast a native latent-variance store to K full d x d matrices."""
    model = as_model(model)
    sigma = np.asarray(sigma, dtype=float)
    lat = model.latent
    if lat is LatentVariance.FULL_GROUP:
        return sigma.copy()
    if lat is LatentVariance.FULL_COMMON:
        return np.broadcast_to(sigma, (K, d, d)).copy()
    if lat is LatentVariance.DIAG_GROUP:
        diag = sigma
    elif lat is LatentVariance.ISO_GROUP:
        diag = np.repeat(sigma[:, None], d, axis=1)
    elif lat is LatentVariance.DIAG_COMMON:
        diag = np.broadcast_to(sigma, (K, d))
    else:
        diag = np.full((K, d), float(sigma))
    out = np.zeros((K, d, d))
    idx = np.arange(d)
    out[:, idx, idx] = diag
    return out


def expand_beta(model, beta, K: int) -> np.ndarray:
    model = as_model(model)
    beta = np.asarray(beta, dtype=float)
    if model.noise.per_group:
        return beta.copy()
    return np.full(K, float(beta))


def _symmetrize_lower(a: np.ndarray) -> np.ndarray:
    low = np.tril(a)
    return low + np.swapaxes(np.tril(a, -1), -1, -2)


def _clamp_full(a: np.ndarray, floor: float) -> tuple[np.ndarray, bool]:
    w, v = np.linalg.eigh(a)
    if np.all(w >= floor):
        return a, False
    w = np.maximum(w, floor)
    return (v * w) @ v.T, True


@dataclass(frozen=True)
class DlmParameters:
    """Parameters of a fitted or hand-built DLM model.

    ``sigma`` and ``beta`` use the native store of ``model`` (see
    :func:`sigma_shape`).  ``center`` is a global offset added to every
    group mean: observed means are ``center + U @ mu_k``.  It defaults to
    zero, which gives the textbook model whose means lie in span(U).
    Variances below ``floor`` are clamped at construction time.
    """

    model: ModelSpec
    pi: np.ndarray
    mu: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray
    center: Optional[np.ndarray] = None
    floor: float = VAR_FLOOR
    clamped: tuple = field(default=(), compare=False)

    def __post_init__(self):
        model = as_model(self.model)
        pi = np.atleast_1d(np.asarray(self.pi, dtype=float))
        U = np.asarray(self.U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        p, d = U.shape
        K = pi.shape[0]
        mu = np.asarray(self.mu, dtype=float).reshape(K, d)
        sigma = np.asarray(self.sigma, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if sigma.shape != sigma_shape(model, K, d):
            raise ValueError(f"sigma for {model} must have shape {sigma_shape(model, K, d)}, got {sigma.shape}")
        want_beta = (K,) if model.noise.per_group else ()
        if beta.shape != want_beta:
            raise ValueError(f"beta for {model} must have shape {want_beta}, got {beta.shape}")
        center = np.zeros(p) if self.center is None else np.asarray(self.center, dtype=float).reshape(p)

        clamped = []
        if model.latent.full:
            sigma = _symmetrize_lower(sigma)
            mats = sigma.reshape(-1, d, d).copy()
            for i, m in enumerate(mats):
                if np.all(np.isfinite(m)):
                    mats[i], hit = _clamp_full(m, self.floor)
                    if hit:
                        clamped.append(f"sigma[{i}]")
            sigma = mats.reshape(sigma.shape)
        elif np.any(sigma < self.floor):
            clamped.append("sigma")
            sigma = np.maximum(sigma, self.floor)
        if np.any(beta < self.floor):
            clamped.append("beta")
            beta = np.maximum(beta, self.floor)

        for name, val in (("model", model), ("pi", pi), ("mu", mu), ("U", U), ("sigma", sigma),
                          ("beta", beta), ("center", center), ("clamped", tuple(clamped))):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    @property
    def p(self) -> int:
        return self.U.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[1]

    def covariances(self) -> np.ndarray:
        """Latent covariances as a K x d x d array."""
        return expand_sigma(self.model, self.sigma, self.K, self.d)

    def noise(self) -> np.ndarray:
        """Noise variances as a K-vector."""
        return expand_beta(self.model, self.beta, self.K)

    def means(self) -> np.ndarray:
        """Observed-space group means, K x p."""
        return self.center + self.mu @ self.U.T

    def n_params(self) -> int:
        return param_count(self.model, self.K, self.p, self.d)


def reconstruct_covariance(params: DlmParameters, k: int) -> np.ndarray:
    """Observed-space covariance ``U Sigma_k U' + beta_k (I - U U')`` of group k."""
    U = params.U
    sig = params.covariances()[k]
    beta = params.noise()[k]
    S = U @ sig @ U.T + beta * (np.eye(params.p) - U @ U.T)
    return (S + S.T) / 2


def validate(params: DlmParameters, tol: float = 1e-10) -> list[str]:
    """List the violated invariants of ``params`` (empty when valid)."""
    out = []
    pi, U = params.pi, params.U
    arrays = {"pi": pi, "mu": params.mu, "U": U, "sigma": params.sigma, "beta": params.beta,
              "center": params.center}
    for name, a in arrays.items():
        if not np.all(np.isfinite(a)):
            out.append(f"non-finite entries in {name}")
    if np.any(pi <= 0):
        out.append("proportions must be strictly positive")
    if abs(pi.sum() - 1.0) > 1e-8:
        out.append(f"proportions sum ≠ 1 (sum = {pi.sum():.6g})")
    K, p, d = params.K, params.p, params.d
    if np.all(np.isfinite(U)):
        err = np.abs(U.T @ U - np.eye(d)).max()
        if err > tol:
            out.append(f"orthonormality violated (max |U'U - I| = {err:.3g})")
    if not 1 <= d <= p - 1:
        out.append(f"latent dimension d={d} must satisfy 1 <= d <= p-1 (p={p})")
    if K >= 2 and d > K - 1:
        out.append(f"latent dimension d={d} exceeds K-1={K - 1}")
    if params.model.latent.full and np.all(np.isfinite(params.sigma)):
        for k, m in enumerate(params.sigma.reshape(-1, d, d)):
            if np.linalg.eigvalsh(m).min() <= 0:
                out.append(f"latent covariance {k} is not positive definite")
    elif np.any(params.sigma <= 0):
        out.append("latent variances must be positive")
    if np.any(params.beta <= 0):
        out.append("noise variances must be positive")
    for name in params.clamped:
        out.append(f"{name} clamped at variance floor {params.floor:g}")
    return out


@dataclass(frozen=True)
class Dataset:
    """An n x p matrix of observations with optional column names."""

    Y: np.ndarray
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] < 2:
            raise ValueError(f"need an n x p matrix with n >= 2, got shape {Y.shape}")
        if not np.all(np.isfinite(Y)):
            raise ValueError("data contain non-finite entries")
        if self.names is not None and len(self.names) != Y.shape[1]:
            raise ValueError(f"{len(self.names)} names for {Y.shape[1]} columns")
        Y.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(s) for s in self.names))

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.Y.shape[1]

    def column_names(self) -> list[str]:
        return list(self.names) if self.names is not None else [f"x{j + 1}" for j in range(self.p)]


@dataclass(frozen=True)
class SoftPartition:
    """An n x K matrix of posterior probabilities; rows sum to one."""

    T: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 2:
            raise ValueError(f"partition must be n x K, got shape {T.shape}")
        if np.any(T < 0) or np.any(T > 1) or not np.all(np.isfinite(T)):
            raise ValueError("posterior probabilities must lie in [0, 1]")
        if np.abs(T.sum(axis=1) - 1).max(initial=0) > 1e-12:
            raise ValueError("partition rows must sum to 1")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @classmethod
    def from_labels(cls, labels, K: Optional[int] = None) -> "SoftPartition":
        labels = np.asarray(labels, dtype=int)
        K = int(labels.max()) + 1 if K is None else K
        T = np.zeros((labels.size, K))
        T[np.arange(labels.size), labels] = 1.0
        return cls(T)

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def K(self) -> int:
        return self.T.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return self.T.argmax(axis=1)

    @property
    def counts(self) -> np.ndarray:
        return self.T.sum(axis=0)


def as_matrix(data) -> np.ndarray:
    """Accept a Dataset or an array-like and return a float n x p array."""
    if isinstance(data, Dataset):
        return data.Y
    Y = np.asarray(data, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def as_posteriors(T) -> np.ndarray:
    if isinstance(T, SoftPartition):
        return T.T
    return np.asarray(T, dtype=float)
