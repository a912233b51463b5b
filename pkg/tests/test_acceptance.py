"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL criterion N`` line with the measured
numbers.  Two checks are known not to hold for the algorithm as described
and are kept as strict xfails (they still print FAIL with the numbers); see
the notes on each.  Deselect the whole module with ``-m "not acceptance"``.
"""
import time
import warnings

import numpy as np
import pytest
from scipy import linalg

from fisherem.driver import FitConfig, best_of, clustering_accuracy, fit
from fisherem.errors import FisherEMError
from fisherem.estep import posteriors
from fisherem.fstep import fisher_axes, fisher_criterion, fisher_ridge, kernel_fisher_axes, soft_between_cov, total_cov
from fisherem.model import all_models, param_count
from fisherem.mstep import expected_complete_loglik, update_parameters
from fisherem.selection import grid_select
from fisherem.simulate import SimSpec, preset, simplex_means, simulate_dlm

from conftest import (MODELS, dense_logpdf, n_variances, perturb_variances, probe_instance, random_params,
                      scatter_pair, sphere_grid)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return emit


@pytest.fixture(autouse=True)
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# 1 ----------------------------------------------------------------------

TABLE_K4_P100_D3 = {"sk_bk": 337, "sk_b": 334, "s_bk": 319, "s_b": 316, "akj_bk": 325, "akj_b": 322,
                    "ak_bk": 317, "ak_b": 314, "aj_bk": 316, "aj_b": 313, "a_bk": 314, "a_b": 311}


def test_criterion_1_param_counts(report):
    t = time.perf_counter()
    got = {m.name: param_count(m, 4, 100, 3) for m in all_models()}
    elapsed = time.perf_counter() - t
    ok = got == TABLE_K4_P100_D3 and elapsed < 1e-3
    report(1, ok, f"12/12 counts match: {got == TABLE_K4_P100_D3}, {elapsed * 1e3:.3f} ms")
    assert ok


# 2, 3 -------------------------------------------------------------------

@pytest.fixture(scope="module")
def iris_fit(iris):
    Y, _ = iris
    t = time.perf_counter()
    res = best_of(Y, FitConfig(model="ak_b", K=3, d=2, n_init=20, seed=0))
    return res, time.perf_counter() - t


def supervised_fisher_axis(Y, y):
    """Leading eigenvector of the classical LDA pair, from hard labels."""
    m = Y.mean(axis=0)
    S = (Y - m).T @ (Y - m) / len(Y)
    SB = np.zeros_like(S)
    for g in np.unique(y):
        dm = Y[y == g].mean(axis=0) - m
        SB += np.mean(y == g) * np.outer(dm, dm)
    return linalg.eigh(SB, S)[1][:, -1]


def test_criterion_2_iris_accuracy(iris, iris_fit, report):
    res, elapsed = iris_fit
    acc = clustering_accuracy(res.labels, iris[1])
    ok = acc >= 0.96 and elapsed < 5
    report(2, ok, f"iris accuracy {acc:.3f} (need >= 0.96), {elapsed:.1f} s")
    assert ok


def test_criterion_3_iris_axis(iris, iris_fit, report):
    res, elapsed = iris_fit
    Y, y = iris
    t = time.perf_counter()
    v = supervised_fisher_axis(Y, y)
    u = res.params.U[:, 0]
    cos = abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
    elapsed += time.perf_counter() - t
    ok = cos >= 0.95 and elapsed < 5
    report(3, ok, f"|cos| to the supervised axis {cos:.4f} (need >= 0.95), {elapsed:.1f} s")
    assert ok


# 4 ----------------------------------------------------------------------

def test_criterion_4_dimension_robustness(report):
    t = time.perf_counter()
    means = {}
    for p in (5, 25, 50, 100):
        accs = []
        for s in range(10):
            D, lab = simulate_dlm(preset("dim_study", p=p, seed=s))
            res = best_of(D, FitConfig(model="akj_bk", K=3, d=2, n_init=10, init_method="kmeans", seed=s))
            accs.append(clustering_accuracy(res.labels, lab))
        means[p] = float(np.mean(accs))
    elapsed = time.perf_counter() - t
    ok = min(means.values()) >= 0.90 and elapsed < 300
    detail = ", ".join(f"p={p}: {a:.3f}" for p, a in means.items())
    report(4, ok, f"mean accuracy {detail} (need >= 0.90 each), {elapsed:.0f} s")
    assert ok


# 5 ----------------------------------------------------------------------

def test_criterion_5_bic_selection(report):
    t = time.perf_counter()
    picks = []
    for s in range(10):
        D, _ = simulate_dlm(preset("bic_study", seed=s))
        sel = grid_select(D, all_models(), range(2, 7), cfg=FitConfig(n_init=3, init_method="kmeans", seed=s))
        picks.append((sel.best_model.name, sel.best_K))
    elapsed = time.perf_counter() - t
    n_k4 = sum(K == 4 for _, K in picks)
    n_beta = sum(not m.endswith("bk") for m, _ in picks)
    ok = n_k4 >= 7 and n_beta >= 7 and elapsed < 600
    report(5, ok, f"K=4 in {n_k4}/10, common-noise model in {n_beta}/10 {picks}, {elapsed:.0f} s")
    assert ok


# 6 ----------------------------------------------------------------------

def monotone_instance(seed):
    rng = np.random.default_rng(seed)
    spec = SimSpec("akj_bk", 3, 10, 2, [40, 40, 40], simplex_means(3, 2, 3.0),
                   rng.uniform(0.5, 2, size=(3, 2)).tolist(), rng.uniform(0.5, 2, size=3).tolist(), seed=seed)
    return simulate_dlm(spec)[0]


def observed_trace(model, seed):
    # a run that ends by emptying a group still has the trace up to that point
    try:
        return fit(monotone_instance(seed), FitConfig(model=model, K=3, d=2, seed=seed)).loglik_trace
    except FisherEMError as exc:
        return np.asarray(exc.trace or [])


@pytest.mark.xfail(strict=True, reason="the Fisher axes do not maximize Q for DLM[ab] unless alpha = beta, "
                                       "so the log-likelihood can decrease")
def test_criterion_6_monotone_a_b(report):
    steps = [np.diff(observed_trace("a_b", s)) for s in range(50)]
    n_mono = sum(bool(np.all(d >= -1e-8)) for d in steps)
    worst = min(d.min() for d in steps if d.size)
    report(6, False if n_mono < 50 else True,
           f"[part 1, a_b] non-decreasing trace in {n_mono}/50 runs, worst step {worst:.3g} "
           "(expected failure, see README)")
    assert n_mono == 50


def test_criterion_6_final_above_initial(report):
    ok_runs = total = 0
    for model in all_models():
        if model.name == "a_b":
            continue
        for s in range(50):
            tr = observed_trace(model, s)
            if tr.size:
                total += 1
                ok_runs += bool(tr[-1] >= tr[0])
    frac = ok_runs / total
    report(6, frac >= 0.95, f"[part 2, other 11 models] final l >= initial l in {ok_runs}/{total} runs")
    assert frac >= 0.95


# 7 ----------------------------------------------------------------------

def test_criterion_7_estep_oracle(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(200):
        model = MODELS[i % 12]
        K = int(rng.integers(2, 5))
        p = int(rng.integers(K, 13))
        d = int(rng.integers(1, K))
        par = random_params(model, K, p, d, rng)
        Y = par.center + rng.normal(scale=2.0, size=(5, p))
        L = dense_logpdf(par, Y)
        want = np.exp(L - L.max(axis=1, keepdims=True))
        want /= want.sum(axis=1, keepdims=True)
        worst = max(worst, float(np.abs(posteriors(par, Y) - want).max()))
    report(7, worst <= 1e-8, f"max posterior gap to the dense oracle {worst:.2e} over 200 instances")
    assert worst <= 1e-8


# 8 ----------------------------------------------------------------------

def plane_criteria(normals, S, SB):
    """Trace criterion of every plane of R^3 given by its unit normal."""
    e = np.where(np.abs(normals[:, :1]) < 0.9, [[1.0, 0, 0]], [[0, 1.0, 0]])
    a = np.cross(normals, e)
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b = np.cross(normals, a)
    A = np.stack([a, b], axis=-1)
    M = np.swapaxes(A, 1, 2) @ S @ A
    N = np.swapaxes(A, 1, 2) @ SB @ A
    return np.trace(np.linalg.solve(M, N), axis1=1, axis2=2)


def test_criterion_8_fstep_d1(report):
    grid = sphere_grid(71)
    gaps = []
    for s in range(20):
        _, _, S, SB = scatter_pair(s)
        brute = np.max(np.einsum("ij,jk,ik->i", grid, SB, grid) / np.einsum("ij,jk,ik->i", grid, S, grid))
        gaps.append(fisher_criterion(fisher_axes(S, SB, 1), S, SB) - brute)
    ok = min(gaps) >= -1e-3
    report(8, ok, f"[d=1] fisher_axes minus grid maximum: worst {min(gaps):.2e} over 20 pairs")
    assert ok


@pytest.mark.xfail(strict=True, reason="the sequential axes maximize each ratio in turn, not the joint "
                                       "trace criterion, so a better pair exists")
def test_criterion_8_fstep_d2(report):
    # for p = 3 the criterion depends on a pair only through its plane, so
    # scanning plane normals covers every orthonormalized pair of directions
    grid = sphere_grid(71)
    gaps = []
    for s in range(20):
        _, _, S, SB = scatter_pair(s)
        brute = plane_criteria(grid, S, SB).max()
        gaps.append(fisher_criterion(fisher_axes(S, SB, 2), S, SB) - brute)
    n_ok = sum(g >= -1e-3 for g in gaps)
    report(8, n_ok == 20, f"[d=2] within 1e-3 of the grid maximum in {n_ok}/20 pairs, worst gap "
                          f"{min(gaps):.3f} (expected failure, see README)")
    assert n_ok == 20


# 9 ----------------------------------------------------------------------

def test_criterion_9_kernel_path(report):
    worst_j = worst_o = 0.0
    for s in range(20):
        rng = np.random.default_rng(s)
        n, p = 20, 30
        Y = rng.normal(size=(n, p))
        Y[:7, :3] += 3
        T = rng.dirichlet(np.ones(3), size=n) * 0.4 + 0.6 * np.eye(3)[np.arange(n) % 3]
        S, SB = total_cov(Y), soft_between_cov(Y, T)
        ridge = fisher_ridge(S)
        Uk = kernel_fisher_axes(Y, T, 2, ridge=ridge)
        Ud = fisher_axes(S, SB, 2, ridge=ridge)
        S_reg = S + ridge * np.eye(p)
        worst_j = max(worst_j, abs(fisher_criterion(Uk, S_reg, SB) - fisher_criterion(Ud, S_reg, SB)))
        worst_o = max(worst_o, float(np.abs(Uk.T @ Uk - np.eye(2)).max()))
    ok = worst_j <= 1e-4 and worst_o <= 1e-8
    report(9, ok, f"criterion gap {worst_j:.2e}, orthonormality error {worst_o:.2e} over 20 instances")
    assert ok


# 10 ---------------------------------------------------------------------

def test_criterion_10_mstep_optimality(report):
    bad = []
    for model in all_models():
        for s in range(20):
            Y, T, U = probe_instance(s)
            par = update_parameters(model, Y, T, U)
            q0 = expected_complete_loglik(par, Y, T)
            if not all(expected_complete_loglik(perturb_variances(par, j, f), Y, T) < q0
                       for j in range(n_variances(par)) for f in (0.99, 1.01)):
                bad.append((model.name, s))
    report(10, not bad, f"Q drops under every +-1% variance perturbation in {240 - len(bad)}/240 probes")
    assert not bad
