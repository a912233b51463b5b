"""The Fisher-EM iteration, its stopping rule and multi-start fitting."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateGroupError, FisherEMError, FitError, SubspaceRankWarning
from .estep import estep
from .fstep import between_rank, fisher_axes, fisher_ridge, kernel_fisher_axes, soft_between_cov, total_cov
from .initialization import initial_partition
from .model import VAR_FLOOR, DlmParameters, ModelSpec, SoftPartition, as_matrix, as_model, as_posteriors
from .mstep import update_parameters

log = logging.getLogger(__name__)

CYCLE_STEP = 1e-4


@dataclass(frozen=True)
class FitConfig:
    model: Union[ModelSpec, str] = "ak_b"
    K: int = 2
    d: Union[int, str] = "auto"
    max_iter: int = 100
    tol: float = 1e-6
    n_init: int = 20
    init_method: str = "random_partition"
    seed: int = 0
    use_kernel_fstep: str = "auto"
    var_floor: float = VAR_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "model", as_model(self.model))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.n_init < 1:
            raise ValueError("n_init must be at least 1")
        if self.use_kernel_fstep not in ("auto", "on", "off"):
            raise ValueError("use_kernel_fstep must be 'auto', 'on' or 'off'")
        if self.d != "auto" and int(self.d) < 1:
            raise ValueError("d must be a positive integer or 'auto'")


@dataclass
class FitResult:
    params: DlmParameters
    partition: SoftPartition
    labels: np.ndarray
    loglik_trace: np.ndarray
    converged: bool
    reason: str
    criteria: dict
    n_iter: int
    seed: Optional[int] = None
    aitken_trace: list = field(default_factory=list)

    @property
    def loglik(self) -> float:
        return float(self.loglik_trace[-1])

    @property
    def model(self) -> ModelSpec:
        return self.params.model

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def d(self) -> int:
        return self.params.d


class AitkenResult(NamedTuple):
    converged: bool
    l_inf: float
    acceleration: float


def _aitken_limit(l0, l1, l2):
    """Asymptotic estimate from three consecutive values; None when stationary."""
    den = l1 - l0
    if den == 0 or abs(den) <= 1e-15 * max(1.0, abs(l1)):
        return None, np.nan
    a = (l2 - l1) / den
    if a == 1.0:
        return np.inf, a
    return l1 + (l2 - l1) / (1 - a), a


def aitken_converged(trace, tol: float) -> AitkenResult:
    """Aitken stopping rule on a log-likelihood history.

    With ``A = (l[q+1]-l[q]) / (l[q]-l[q-1])`` the limit is estimated by
    ``l[q] + (l[q+1]-l[q]) / (1-A)``; convergence is declared when two
    successive estimates differ by less than ``tol``.  A zero increment in
    the denominator means the sequence is stationary and counts as
    converged.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.size < 3:
        raise ValueError("Aitken's criterion needs at least 3 values")
    last, a = _aitken_limit(*trace[-3:])
    if last is None:
        return AitkenResult(True, float(trace[-1]), np.nan)
    if trace.size < 4:
        return AitkenResult(False, float(last), float(a))
    prev, _ = _aitken_limit(*trace[-4:-1])
    if prev is None or not np.isfinite(last):
        return AitkenResult(False, float(last), float(a))
    return AitkenResult(bool(abs(last - prev) < tol), float(last), float(a))


def resolve_d(d, K: int, p: int) -> int:
    if d == "auto":
        d = min(K - 1, p - 1)
    d = int(d)
    if not 1 <= d <= K - 1:
        raise ValueError(f"latent dimension must satisfy 1 <= d <= K-1, got d={d}, K={K}")
    if d >= p:
        raise ValueError(f"latent dimension must be smaller than p={p}, got d={d}")
    return d


def criteria_for(loglik: float, model, K: int, p: int, d: int, n: int, T) -> dict:
    from .selection import aic, bic, icl
    from .model import param_count

    gamma = param_count(model, K, p, d)
    return {"bic": bic(loglik, gamma, n), "aic": aic(loglik, gamma), "icl": icl(loglik, gamma, n, T)}


def fit(data, cfg: FitConfig, T0=None, seed: Optional[int] = None) -> FitResult:
    """Run Fisher-EM from one initial partition.

    Each cycle runs the F-step (axes from the current posteriors), the
    M-step and then the E-step, whose log-likelihood is recorded.  The
    state reached at termination is returned.
    """
    Y = as_matrix(data)
    n, p = Y.shape
    K = cfg.K
    if K < 2:
        raise ValueError("Fisher-EM needs K >= 2")
    auto_d = cfg.d == "auto"
    d = resolve_d(cfg.d, K, p)
    seed = cfg.seed if seed is None else seed

    if T0 is not None:
        T = as_posteriors(T0)
        if T.shape != (n, K):
            raise ValueError(f"initial partition must be {n} x {K}, got {T.shape}")
    elif cfg.init_method == "user_partition":
        raise ValueError("init_method 'user_partition' requires an initial partition")
    else:
        T = initial_partition(cfg.init_method, Y, K, d, seed).T

    kernel = cfg.use_kernel_fstep == "on" or (cfg.use_kernel_fstep == "auto" and n < p)
    center = Y.mean(axis=0)
    if not kernel:
        S = total_cov(Y)
        ridge = fisher_ridge(S)

    trace: list[float] = []
    aitken: list[float] = []
    state = None
    reason = "max_iter"
    try:
        rank = between_rank(Y, T)
        if rank < d:
            if not auto_d or rank == 0:
                warnings.warn(f"between matrix has rank {rank} < d={d}", SubspaceRankWarning, stacklevel=2)
            if auto_d and rank >= 1:
                warnings.warn(f"reducing d from {d} to the between-matrix rank {rank}",
                              SubspaceRankWarning, stacklevel=2)
                d = rank
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SubspaceRankWarning)
            for _ in range(cfg.max_iter):
                if kernel:
                    U = kernel_fisher_axes(Y, T, d)
                else:
                    U = fisher_axes(S, soft_between_cov(Y, T), d, ridge=ridge)
                params = update_parameters(cfg.model, Y, T, U, center=center, floor=cfg.var_floor)
                T, ll = estep(params, Y)
                if not np.isfinite(ll):
                    raise FitError("non-finite log-likelihood", trace)
                trace.append(ll)
                state = (ll, params, T)
                if len(trace) >= 3:
                    res = aitken_converged(trace, cfg.tol)
                    aitken.append(res.l_inf)
                    if res.converged:
                        # a period-2 oscillation has a constant Aitken limit too
                        step = abs(trace[-1] - trace[-2])
                        reason = "cycle" if step > CYCLE_STEP * max(1.0, abs(ll)) else "aitken"
                        break
    except DegenerateGroupError as exc:
        exc.trace = list(trace)
        raise
    except FitError:
        raise
    except (FisherEMError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise FitError(f"fit aborted: {exc}", trace) from exc

    ll, params, T = state
    part = SoftPartition(T)
    return FitResult(
        params=params,
        partition=part,
        labels=part.labels,
        loglik_trace=np.asarray(trace),
        converged=reason == "aitken",
        reason=reason,
        criteria=criteria_for(ll, cfg.model, K, p, params.d, n, T),
        n_iter=len(trace),
        seed=seed,
        aitken_trace=aitken,
    )


def _try_fit(args):
    data, cfg, T0, seed = args
    try:
        return fit(data, cfg, T0=T0, seed=seed), None
    except (FisherEMError, np.linalg.LinAlgError, RuntimeError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def best_of(data, cfg: FitConfig, T0=None, jobs: int = 1, prefer_converged: bool = True) -> FitResult:
    """Best fit (highest final log-likelihood) over ``cfg.n_init`` seeded restarts.

    Restart i uses seed ``cfg.seed + i``.  With ``prefer_converged`` the
    converged restarts are ranked first: a run stopped by ``max_iter`` or
    caught in a cycle ends on a state that is not a fixed point.  Failed restarts are skipped; an error is raised
    only if every restart fails.
    """
    Y = as_matrix(data)
    n_init = 1 if T0 is not None else cfg.n_init
    tasks = [(Y, cfg, T0, cfg.seed + i) for i in range(n_init)]
    if jobs > 1 and n_init > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_try_fit, tasks))
    else:
        outcomes = [_try_fit(t) for t in tasks]
    fits = []
    for (_, _, _, s), (res, err) in zip(tasks, outcomes):
        if res is None:
            log.info("restart with seed %d failed: %s", s, err)
        else:
            fits.append(res)
    if not fits:
        raise FitError(f"all {n_init} restarts failed (last error: {outcomes[-1][1]})")
    return max(fits, key=lambda r: (prefer_converged and r.converged, r.loglik, -r.seed))


def clustering_accuracy(labels, truth) -> float:
    """Fraction of agreement after the best one-to-one matching of cluster labels."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise ValueError(f"length mismatch: {labels.shape} vs {truth.shape}")
    if labels.size == 0:
        raise ValueError("empty label vectors")
    lab_vals, lab_idx = np.unique(labels, return_inverse=True)
    tru_vals, tru_idx = np.unique(truth, return_inverse=True)
    conf = np.zeros((lab_vals.size, tru_vals.size))
    np.add.at(conf, (lab_idx, tru_idx), 1)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    return float(conf[rows, cols].sum() / labels.size)


def with_overrides(cfg: FitConfig, **kw) -> FitConfig:
    return replace(cfg, **kw)
