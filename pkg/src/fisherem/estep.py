"""Posterior probabilities and log-likelihood of a DLM model.

Only the d-dimensional projection ``U'(y - m_k)`` and the squared residual
``||y - m_k||^2 - ||U'(y - m_k)||^2`` are needed, so the orthogonal
complement of ``U`` is never formed.
"""

import numpy as np
from scipy import linalg

from .errors import SingularCovarianceError
from .model import DlmParameters, as_matrix

LOG_2PI = np.log(2 * np.pi)
MAX_GAMMA_GAP = 1400.0


def gamma_matrix(params: DlmParameters, data) -> np.ndarray:
    """Cost ``Gamma_k(y_i) = -2 log(pi_k phi_k(y_i))`` for every i, k (n x K)."""
    Y = as_matrix(data) - params.center
    U = params.U
    p, d = params.p, params.d
    if Y.shape[1] != p:
        raise ValueError(f"data have {Y.shape[1]} columns, model expects {p}")
    proj = Y @ U
    # residual off the subspace; the same for every group because m_k is in span(U)
    off = Y - proj @ U.T
    resid = np.einsum("ij,ij->i", off, off)
    sigmas = params.covariances()
    betas = params.noise()
    out = np.empty((Y.shape[0], params.K))
    for k in range(params.K):
        try:
            chol = linalg.cholesky(sigmas[k], lower=True)
        except linalg.LinAlgError as exc:
            raise SingularCovarianceError(k, str(exc)) from None
        z = linalg.solve_triangular(chol, (proj - params.mu[k]).T, lower=True)
        logdet = 2 * np.log(np.diag(chol)).sum()
        out[:, k] = (np.einsum("ji,ji->i", z, z) + resid / betas[k] + logdet
                     + (p - d) * np.log(betas[k]) - 2 * np.log(params.pi[k]) + p * LOG_2PI)
    return out


def cost_gamma(params: DlmParameters, y, k: int) -> float:
    """Gamma_k of one observation (p-vector)."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(gamma_matrix(params, y)[0, k])


def posteriors_from_gamma(gam: np.ndarray) -> np.ndarray:
    """Softmax of ``-Gamma/2`` along groups, shifted by the row minimum."""
    gap = np.minimum(gam - gam.min(axis=1, keepdims=True), MAX_GAMMA_GAP)
    w = np.exp(-0.5 * gap)
    return w / w.sum(axis=1, keepdims=True)


def loglik_from_gamma(gam: np.ndarray) -> float:
    h = -0.5 * gam
    top = h.max(axis=1)
    return float(np.sum(top + np.log(np.exp(h - top[:, None]).sum(axis=1))))


def posteriors(params: DlmParameters, data) -> np.ndarray:
    """n x K posterior probabilities ``t_ik``."""
    return posteriors_from_gamma(gamma_matrix(params, data))


def log_likelihood(params: DlmParameters, data) -> float:
    """Observed-data log-likelihood ``sum_i log sum_k pi_k phi_k(y_i)``."""
    return loglik_from_gamma(gamma_matrix(params, data))


def estep(params: DlmParameters, data) -> tuple[np.ndarray, float]:
    """Posteriors and log-likelihood from a single evaluation of the costs."""
    gam = gamma_matrix(params, data)
    return posteriors_from_gamma(gam), loglik_from_gamma(gam)
