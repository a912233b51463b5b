"""Closed-form M-step for the 12 DLM models and the expected complete log-likelihood."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateGroupError, SingularCovarianceError
from .estep import LOG_2PI
from .model import VAR_FLOOR, DlmParameters, LatentVariance, as_matrix, as_model, as_posteriors

MIN_GROUP_MASS = 1e-8


@dataclass(frozen=True)
class GroupMoments:
    n_k: np.ndarray  # (K,)
    m_hat: np.ndarray  # (K, p)
    C_k: np.ndarray  # (K, p, p)
    C: np.ndarray  # (p, p) pooled within covariance


@dataclass(frozen=True)
class ProjectedMoments:
    """The parts of the group moments the M-step actually needs.

    ``UCU[k] = U' C_k U`` and ``traces[k] = trace(C_k)``, computed without
    forming any p x p matrix.
    """

    n_k: np.ndarray
    m_hat: np.ndarray
    UCU: np.ndarray
    traces: np.ndarray

    @property
    def weights(self):
        return self.n_k / self.n_k.sum()

    def pooled(self):
        w = self.weights
        return np.tensordot(w, self.UCU, axes=1), float(w @ self.traces)


def _check_mass(n_k):
    for k in np.flatnonzero(n_k < MIN_GROUP_MASS):
        raise DegenerateGroupError(k, n_k[k])


def soft_moments(data, T) -> GroupMoments:
    """Soft counts, means and covariances of every group (dense p x p)."""
    Y, T = as_matrix(data), as_posteriors(T)
    n_k = T.sum(axis=0)
    _check_mass(n_k)
    m_hat = (T.T @ Y) / n_k[:, None]
    K, p = m_hat.shape
    C_k = np.empty((K, p, p))
    for k in range(K):
        D = Y - m_hat[k]
        C_k[k] = (D.T * T[:, k]) @ D / n_k[k]
    C = np.tensordot(n_k / Y.shape[0], C_k, axes=1)
    return GroupMoments(n_k, m_hat, C_k, C)


def projected_moments(data, T, U) -> ProjectedMoments:
    Y, T = as_matrix(data), as_posteriors(T)
    U = np.asarray(U, dtype=float)
    n_k = T.sum(axis=0)
    _check_mass(n_k)
    m_hat = (T.T @ Y) / n_k[:, None]
    K, d = m_hat.shape[0], U.shape[1]
    UCU = np.empty((K, d, d))
    traces = np.empty(K)
    for k in range(K):
        D = Y - m_hat[k]
        Z = D @ U
        t = T[:, k]
        UCU[k] = (Z.T * t) @ Z / n_k[k]
        traces[k] = t @ np.einsum("ij,ij->i", D, D) / n_k[k]
    UCU = (UCU + np.swapaxes(UCU, 1, 2)) / 2
    return ProjectedMoments(n_k, m_hat, UCU, traces)


def _residual_variance(trace, projected_trace, p, d, scale):
    resid = trace - projected_trace
    if resid < -1e-10 * max(1.0, scale):
        raise FloatingPointError(f"negative residual variance {resid:.3g}; is U orthonormal?")
    return resid / (p - d)


def update_parameters(model, data, T, U, center: Optional[np.ndarray] = None,
                      floor: float = VAR_FLOOR) -> DlmParameters:
    """Maximize the expected complete log-likelihood for fixed T and U.

    ``center`` is the global offset of the model means (zero by default);
    latent means are ``U'(m_hat_k - center)``.
    """
    model = as_model(model)
    Y = as_matrix(data)
    U = np.asarray(U, dtype=float)
    p, d = U.shape
    if d >= p:
        raise ValueError(f"noise variance undefined when d >= p (d={d}, p={p})")
    center = np.zeros(p) if center is None else np.asarray(center, dtype=float)
    mom = projected_moments(Y, T, U)
    K = mom.n_k.size
    pi = mom.n_k / Y.shape[0]
    mu = (mom.m_hat - center) @ U
    UCU_pool, trace_pool = mom.pooled()

    lat = model.latent
    if lat is LatentVariance.FULL_GROUP:
        sigma = mom.UCU
    elif lat is LatentVariance.FULL_COMMON:
        sigma = UCU_pool
    elif lat is LatentVariance.DIAG_GROUP:
        sigma = np.diagonal(mom.UCU, axis1=1, axis2=2).copy()
    elif lat is LatentVariance.ISO_GROUP:
        sigma = np.trace(mom.UCU, axis1=1, axis2=2) / d
    elif lat is LatentVariance.DIAG_COMMON:
        sigma = np.diag(UCU_pool).copy()
    else:
        sigma = np.trace(UCU_pool) / d

    if model.noise.per_group:
        beta = np.array([_residual_variance(mom.traces[k], np.trace(mom.UCU[k]), p, d, mom.traces[k])
                         for k in range(K)])
    else:
        beta = np.array(_residual_variance(trace_pool, np.trace(UCU_pool), p, d, trace_pool))
    return DlmParameters(model, pi, mu, U, sigma, beta, center=center, floor=floor)


def expected_complete_loglik(params: DlmParameters, data, T) -> float:
    """Expected complete log-likelihood Q in its closed form.

    Q = -1/2 sum_k n_k [ -2 log pi_k + tr(Sigma_k^-1 U'C_kU) + log|Sigma_k|
                         + (p-d) log beta_k + (tr C_k - tr U'C_kU) / beta_k + p log 2pi ]

    with ``C_k`` the soft covariance of group k around its soft mean.
    """
    mom = projected_moments(data, T, params.U)
    p, d = params.p, params.d
    sigmas = params.covariances()
    betas = params.noise()
    total = 0.0
    for k in range(params.K):
        sign, logdet = np.linalg.slogdet(sigmas[k])
        if sign <= 0:
            raise SingularCovarianceError(k)
        fit_term = np.trace(np.linalg.solve(sigmas[k], mom.UCU[k]))
        resid = mom.traces[k] - np.trace(mom.UCU[k])
        total += mom.n_k[k] * (-2 * np.log(params.pi[k]) + fit_term + logdet
                               + (p - d) * np.log(betas[k]) + resid / betas[k] + p * LOG_2PI)
    return -0.5 * total
