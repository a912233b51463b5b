import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fisherem.fstep import soft_between_cov, total_cov
from fisherem.model import DlmParameters, all_models, as_model, sigma_shape
from fisherem.simulate import random_orthogonal

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=15, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA_DIR = Path(__file__).parent / "data"
MODELS = all_models()
MODEL_NAMES = [m.name for m in MODELS]


def random_sigma(model, K, d, rng):
    shape = sigma_shape(model, K, d)
    if model.latent.full:
        A = rng.standard_normal(shape[:-2] + (d, d + 2))
        S = A @ np.swapaxes(A, -1, -2) / (d + 2) + 0.2 * np.eye(d)
        return S
    return rng.uniform(0.3, 3.0, size=shape)


def random_params(model, K, p, d, rng, center=True) -> DlmParameters:
    """Seeded random but valid parameter set for ``model``."""
    model = as_model(model)
    U = random_orthogonal(p, rng)[:, :d]
    pi = rng.dirichlet(np.full(K, 3.0))
    mu = rng.normal(scale=2.0, size=(K, d))
    sigma = random_sigma(model, K, d, rng)
    beta = rng.uniform(0.2, 2.0, size=K) if model.noise.per_group else np.array(rng.uniform(0.2, 2.0))
    c = rng.normal(size=p) if center else None
    return DlmParameters(model, pi, mu, U, sigma, beta, center=c)


def dense_logpdf(params: DlmParameters, Y):
    """n x K matrix of log(pi_k phi(y; m_k, S_k)) from dense covariances."""
    from scipy.stats import multivariate_normal
    from fisherem.model import reconstruct_covariance

    means = params.means()
    return np.column_stack([
        np.log(params.pi[k]) + multivariate_normal(means[k], reconstruct_covariance(params, k)).logpdf(Y)
        for k in range(params.K)
    ]).reshape(Y.shape[0], params.K)


def sphere_grid(m=100):
    """2 m^2 unit vectors of R^3 on a polar/azimuth grid of the upper hemisphere."""
    th = np.linspace(0, np.pi / 2, m)
    ph = np.linspace(0, 2 * np.pi, 2 * m, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")
    return np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)


def scatter_pair(seed, p=3, K=3, n=60):
    rng = np.random.default_rng(seed)
    Y = rng.normal(size=(n, p)) @ rng.normal(size=(p, p))
    Y[: n // K] += rng.normal(scale=3, size=p)
    Y[n // K: 2 * n // K] += rng.normal(scale=3, size=p)
    T = rng.dirichlet(np.ones(K), size=n)
    T = 0.3 * T + 0.7 * np.eye(K)[np.arange(n) * K // n]
    return Y, T, total_cov(Y), soft_between_cov(Y, T)


def perturb_variances(par: DlmParameters, which: int, factor: float) -> DlmParameters:
    """Scale one scalar variance entry (or one eigenvalue of a full matrix) by ``factor``."""
    sigma = np.array(par.sigma, dtype=float)
    beta = np.array(par.beta, dtype=float)
    n_sigma = sigma.size if not par.model.latent.full else sigma.reshape(-1, par.d, par.d).shape[0] * par.d
    if which < n_sigma:
        if par.model.latent.full:
            mats = sigma.reshape(-1, par.d, par.d)
            g, j = divmod(which, par.d)
            w, V = np.linalg.eigh(mats[g])
            w[j] *= factor
            mats[g] = (V * w) @ V.T
            sigma = mats.reshape(sigma.shape)
        else:
            flat = sigma.reshape(-1)
            flat[which] *= factor
            sigma = flat.reshape(sigma.shape)
    else:
        flat = beta.reshape(-1)
        flat[which - n_sigma] *= factor
        beta = flat.reshape(beta.shape)
    return DlmParameters(par.model, par.pi, par.mu, par.U, sigma, beta, center=par.center)


def n_variances(par):
    n_sigma = par.sigma.size if not par.model.latent.full else par.sigma.reshape(-1, par.d, par.d).shape[0] * par.d
    return n_sigma + par.beta.size


def probe_instance(seed, K=3, p=6, d=2, n=80):
    rng = np.random.default_rng(seed)
    Y = rng.normal(size=(n, p)) * rng.uniform(0.5, 2, size=p)
    Y[: n // 2, :2] += 2.5
    T = rng.dirichlet(np.ones(K) * 0.7, size=n)
    U = random_orthogonal(p, rng)[:, :d]
    return Y, T, U


@pytest.fixture(scope="session")
def iris():
    Y = np.loadtxt(DATA_DIR / "iris.csv", delimiter=",", skiprows=1)
    y = np.loadtxt(DATA_DIR / "iris_labels.csv", skiprows=1).astype(int)
    return Y, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
