"""Estimation of the discriminative orientation U from a soft partition.

Axes are extracted one at a time: each new axis maximizes the Fisher ratio
inside the orthogonal complement of the axes already found (orthonormal
discriminant vectors).  When n < p the same computation is carried out on
the n x n Gram matrix and mapped back to the observed space.
"""

import warnings

import numpy as np
from scipy import linalg

from .errors import DegenerateGroupError, SubspaceRankWarning
from .model import as_matrix, as_posteriors

MIN_GROUP_MASS = 1e-8
COND_LIMIT = 1e12
RIDGE_SCALE = 1e-8


def total_cov(data) -> np.ndarray:
    """Covariance of the whole dataset, normalized by 1/n."""
    Y = as_matrix(data)
    Yc = Y - Y.mean(axis=0)
    return Yc.T @ Yc / Y.shape[0]


def _soft_means(Y, T):
    n_k = T.sum(axis=0)
    for k in np.flatnonzero(n_k < MIN_GROUP_MASS):
        raise DegenerateGroupError(k, n_k[k])
    return n_k, (T.T @ Y) / n_k[:, None]


def soft_between_cov(data, T) -> np.ndarray:
    """Between-group covariance built from posterior-weighted group means."""
    Y, T = as_matrix(data), as_posteriors(T)
    n = Y.shape[0]
    n_k, m = _soft_means(Y, T)
    diff = m - Y.mean(axis=0)
    SB = (diff.T * (n_k / n)) @ diff
    return (SB + SB.T) / 2


def fisher_criterion(U, S, SB) -> float:
    """``trace((U'SU)^-1 U'SB U)``."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    num = U.T @ SB @ U
    den = U.T @ S @ U
    try:
        return float(np.trace(linalg.solve(den, num, assume_a="pos")))
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"U'SU is singular: {exc}") from None


def fisher_ridge(S) -> float:
    """Ridge added to S before solving the generalized eigenproblems.

    Zero unless S is ill-conditioned (condition number above 1e12), in
    which case ``1e-8 * trace(S) / p``.
    """
    S = np.asarray(S, dtype=float)
    w = linalg.eigvalsh(S)
    cond = np.inf if w[0] <= 0 else w[-1] / w[0]
    return RIDGE_SCALE * np.trace(S) / S.shape[0] if cond > COND_LIMIT else 0.0


def complement_basis(Q) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(Q).

    Gram-Schmidt over the canonical vectors, always taking next the one
    with the largest residual norm, followed by one re-orthogonalization
    pass against Q.  ``Q`` must have orthonormal columns.

    The pivoted sweep is the column-pivoted QR factorization of the
    projector ``I - QQ'``, so LAPACK does the work; signs are fixed so that
    each vector has a positive coefficient on its pivot.
    """
    Q = np.asarray(Q, dtype=float)
    p, m = Q.shape
    V, R, _ = linalg.qr(np.eye(p) - Q @ Q.T, pivoting=True)
    V = V[:, : p - m] * np.sign(np.diag(R)[: p - m])
    V -= Q @ (Q.T @ V)
    return V


def _leading_eigvec(A, B) -> np.ndarray:
    m = A.shape[0]
    if m == 1:
        return np.ones(1)
    _, vec = linalg.eigh(A, B, subset_by_index=[m - 1, m - 1])
    return vec[:, 0]


def _fix_sign(u):
    j = int(np.argmax(np.abs(u)))
    return -u if u[j] < 0 else u


def _numerical_rank(SB) -> int:
    w = linalg.eigvalsh(SB)
    top = max(abs(w[-1]), abs(w[0]))
    if top == 0:
        return 0
    return int(np.sum(w > 1e-10 * top))


def between_rank(data, T) -> int:
    """Numerical rank of the soft between matrix, from its K x K Gram form."""
    Y, T = as_matrix(data), as_posteriors(T)
    n_k, m = _soft_means(Y, T)
    D = (m - Y.mean(axis=0)) * np.sqrt(n_k / Y.shape[0])[:, None]
    return _numerical_rank(D @ D.T)


def fisher_axes(S, SB, d: int, ridge=None) -> np.ndarray:
    """p x d orthonormal axes maximizing the Fisher ratio of (SB, S).

    The first axis is the leading generalized eigenvector of (SB, S).  Axis
    r is the leading generalized eigenvector of the pair restricted to the
    orthogonal complement of axes 1..r-1, mapped back to the observed space.

    Parameters
    ----------
    S, SB : (p, p) arrays
        Total and between covariance matrices.
    d : int
        Number of axes.
    ridge : float, optional
        Value added to the diagonal of S.  Defaults to :func:`fisher_ridge`.
    """
    S = np.asarray(S, dtype=float)
    SB = np.asarray(SB, dtype=float)
    p = S.shape[0]
    if not 1 <= d <= p:
        raise ValueError(f"need 1 <= d <= p, got d={d}, p={p}")
    rank = _numerical_rank(SB)
    if d > rank:
        warnings.warn(f"requested {d} axes but the between matrix has numerical rank {rank}; "
                      "trailing axes carry no discriminative information", SubspaceRankWarning,
                      stacklevel=2)
    lam = fisher_ridge(S) if ridge is None else float(ridge)
    S_reg = S + lam * np.eye(p) if lam > 0 else S
    U = np.zeros((p, d))
    for r in range(d):
        if r == 0:
            u = _leading_eigvec(SB, S_reg)
        else:
            V = complement_basis(U[:, :r])
            w = _leading_eigvec(V.T @ SB @ V, V.T @ S_reg @ V)
            u = V @ w
        U[:, r] = _fix_sign(u / np.linalg.norm(u))
    return U


def _orthonormalize_columns(U):
    U = U.copy()
    for j in range(U.shape[1]):
        for _ in range(2):
            U[:, j] -= U[:, :j] @ (U[:, :j].T @ U[:, j])
        U[:, j] /= np.linalg.norm(U[:, j])
    return U


def kernel_fisher_axes(data, T, d: int, ridge=None) -> np.ndarray:
    """Fisher axes computed from the n x n Gram matrix (for n < p).

    The axes are written ``U = Yc' H`` with ``Yc`` the centered data.  The
    sequential procedure runs on an orthonormal basis of the row space of
    ``Yc`` expressed through the eigenvectors of ``G = Yc Yc'``, so only
    n x n problems are solved.  ``ridge`` plays the same role as in
    :func:`fisher_axes`; by default it is the ridge that the direct path
    would use for ``S = Yc'Yc / n``.
    """
    Y, T = as_matrix(data), as_posteriors(T)
    n, p = Y.shape
    if T.shape[1] < 2:
        raise ValueError("kernel F-step needs K >= 2: the between matrix is zero")
    Yc = Y - Y.mean(axis=0)
    G = Yc @ Yc.T
    lam_g, Qg = linalg.eigh(G)
    keep = lam_g > 1e-12 * max(lam_g[-1], np.finfo(float).tiny)
    lam_g, Qg = lam_g[keep], Qg[:, keep]
    r = lam_g.size
    if d > r:
        raise ValueError(f"cannot extract {d} axes from data of rank {r}")
    if ridge is None:
        s_eig = lam_g / n
        trace_s = s_eig.sum()
        cond = np.inf if r < p else s_eig.max() / s_eig.min()
        ridge = RIDGE_SCALE * trace_s / p if cond > COND_LIMIT else 0.0

    H0 = Qg / np.sqrt(lam_g)  # Yc' H0 is an orthonormal basis of the row space
    n_k, _ = _soft_means(Y, T)
    C = (G @ T) / n_k  # soft group means in Gram coordinates
    Cb = H0.T @ C
    SB_r = (Cb * (n_k / n)) @ Cb.T
    S_r = np.diag(lam_g / n + ridge)
    W = fisher_axes(S_r, (SB_r + SB_r.T) / 2, d, ridge=0.0)
    U = Yc.T @ (H0 @ W)
    U = _orthonormalize_columns(U)
    return np.column_stack([_fix_sign(U[:, j]) for j in range(d)])
