"""Penalized-likelihood criteria and grid search over models and group counts.

All criteria are oriented so that larger is better.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .model import ModelSpec, all_models, as_model, as_posteriors

log = logging.getLogger(__name__)

CRITERIA = ("bic", "aic", "icl")


def bic(loglik: float, n_params: int, n: int) -> float:
    return float(loglik - 0.5 * n_params * np.log(n))


def aic(loglik: float, n_params: int) -> float:
    return float(loglik - n_params)


def entropy_term(T) -> float:
    """``sum_ik t_ik log t_ik`` with 0 log 0 = 0 (always <= 0)."""
    T = as_posteriors(T)
    pos = T > 0
    return float(np.sum(T[pos] * np.log(T[pos])))


def icl(loglik: float, n_params: int, n: int, T) -> float:
    return bic(loglik, n_params, n) + entropy_term(T)


@dataclass
class SelectionResult:
    models: list
    K_range: list
    criterion: str
    table: dict  # (model name, K) -> FitResult or None when every restart failed
    best_model: ModelSpec
    best_K: int

    @property
    def best(self):
        return self.table[(self.best_model.name, self.best_K)]

    def matrix(self, criterion: Optional[str] = None, per_observation: bool = False) -> np.ndarray:
        """|models| x |K_range| array of criterion values, NaN for failed cells.

        ``per_observation`` divides by n, the scale at which published
        BIC tables are usually printed.
        """
        crit = criterion or self.criterion
        out = np.full((len(self.models), len(self.K_range)), np.nan)
        for i, m in enumerate(self.models):
            for j, K in enumerate(self.K_range):
                res = self.table[(m.name, K)]
                if res is not None:
                    val = res.criteria[crit]
                    out[i, j] = val / res.partition.n if per_observation else val
        return out


def grid_select(data, models: Sequence = None, K_range: Sequence[int] = range(2, 7), cfg=None,
                criterion: str = "bic", jobs: int = 1) -> SelectionResult:
    """Fit every (model, K) cell with :func:`best_of` and pick the criterion argmax.

    ``cfg`` supplies everything but the model and K (d stays "auto" unless
    set).  Cells where all restarts fail are kept as None and skipped.
    """
    from .driver import FitConfig, best_of
    from .errors import FitError

    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    models = all_models() if models is None else [as_model(m) for m in models]
    K_range = list(K_range)
    if not models or not K_range:
        raise ValueError("empty selection grid")
    cfg = FitConfig() if cfg is None else cfg
    table = {}
    best_key, best_val = None, -np.inf
    for m in models:
        for K in K_range:
            cell = replace(cfg, model=m, K=K)
            try:
                res = best_of(data, cell, jobs=jobs)
            except (FitError, ValueError) as exc:
                log.info("cell %s K=%d failed: %s", m.name, K, exc)
                res = None
            table[(m.name, K)] = res
            if res is not None and res.criteria[criterion] > best_val:
                best_key, best_val = (m, K), res.criteria[criterion]
    if best_key is None:
        raise FitError("every cell of the selection grid failed")
    return SelectionResult(models, K_range, criterion, table, best_key[0], best_key[1])
