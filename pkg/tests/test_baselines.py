"""Baseline estimators: exactness, optimality certificates, cross-checks."""
import numpy as np
import pytest

from fusionshrink.baselines import (
    cp_als,
    cp_per_time,
    cp_reconstruct,
    cv_fused_lasso,
    fused_lasso_1d,
    fused_lasso_matrix,
    fused_lasso_objective,
    fused_lasso_svd,
    l1_trendfilter_pg,
    optimal_hard_threshold_rank,
    svd_per_time,
    svd_rank_d,
    svd_windowed,
    svd_windowed_all,
)


def check_fused_lasso_kkt(y, x, lam, tol=1e-8):
    """Subgradient certificate for 0.5||y-x||^2 + lam sum|dx|.

    The running residual sum u_t must stay inside [-lam, lam], end at zero,
    and sit exactly on the active bound wherever x jumps.
    """
    u = np.cumsum(y - x)
    assert abs(u[-1]) <= tol
    assert np.max(np.abs(u[:-1])) <= lam + tol
    dx = np.diff(x)
    # stationarity forces u_t = -lam sign(dx_t) on active differences
    assert np.all(np.abs(u[:-1][dx > 1e-9] + lam) <= tol)
    assert np.all(np.abs(u[:-1][dx < -1e-9] - lam) <= tol)


# ----- truncated SVD ------------------------------------------------------------


def test_svd_rank_d_exact_and_eckart_young():
    rng = np.random.default_rng(0)
    U = rng.standard_normal((8, 2))
    V = rng.standard_normal((6, 2))
    low = U @ V.T
    np.testing.assert_allclose(svd_rank_d(low, 2), low, atol=1e-10)
    Y = rng.standard_normal((8, 6))
    s = np.linalg.svd(Y, compute_uv=False)
    err = np.linalg.norm(Y - svd_rank_d(Y, 2))
    assert err == pytest.approx(np.sqrt(np.sum(s[2:] ** 2)), rel=1e-12)


def test_svd_per_time_is_per_slice():
    rng = np.random.default_rng(1)
    Ys = rng.standard_normal((3, 5, 4))
    out = svd_per_time(Ys, 2)
    for t in range(3):
        np.testing.assert_allclose(out[t], svd_rank_d(Ys[t], 2), atol=1e-12)


def test_hard_threshold_rank():
    assert optimal_hard_threshold_rank(np.zeros((10, 10))) == 0
    rng = np.random.default_rng(2)
    u, v = rng.standard_normal(40), rng.standard_normal(30)
    strong = 50.0 * np.outer(u, v) + 0.1 * rng.standard_normal((40, 30))
    assert optimal_hard_threshold_rank(strong) == 1
    zeros = sum(
        optimal_hard_threshold_rank(rng.standard_normal((50, 50))) == 0
        for _ in range(50)
    )
    assert zeros >= 45  # pure noise keeps nothing almost always


def test_svd_windowed_recovers_static_signal():
    rng = np.random.default_rng(3)
    U = rng.standard_normal((12, 2)) * 3.0
    V = rng.standard_normal((10, 2)) * 3.0
    truth = U @ V.T
    Ys = np.broadcast_to(truth, (5, 12, 10)) + 0.1 * rng.standard_normal((5, 12, 10))
    out = svd_windowed_all(Ys)
    assert out.shape == Ys.shape
    err = np.sqrt(np.mean((out - truth) ** 2))
    raw = np.sqrt(np.mean((Ys - truth) ** 2))
    assert err < raw


def test_svd_windowed_middle_slice_recomputation():
    rng = np.random.default_rng(4)
    Ys = rng.standard_normal((4, 6, 5))
    t = 2
    stacked = np.concatenate([Ys[1], Ys[2], Ys[3]], axis=1)
    rank = optimal_hard_threshold_rank(stacked)
    expected = (
        np.zeros((6, 5)) if rank == 0 else svd_rank_d(stacked, rank)[:, 5:10]
    )
    np.testing.assert_allclose(svd_windowed(Ys, t), expected, atol=1e-12)
    with pytest.raises(ValueError):
        svd_windowed(Ys, 4)
    single = svd_windowed(Ys[:1], 0)
    rank1 = optimal_hard_threshold_rank(Ys[0])
    if rank1 > 0:
        np.testing.assert_allclose(single, svd_rank_d(Ys[0], rank1), atol=1e-12)


# ----- fused lasso ----------------------------------------------------------------


def test_fused_lasso_lam_zero_and_tiny_inputs():
    rng = np.random.default_rng(5)
    y = rng.standard_normal(20)
    np.testing.assert_array_equal(fused_lasso_1d(y, 0.0), y)
    np.testing.assert_array_equal(fused_lasso_1d(y[:1], 3.0), y[:1])
    assert fused_lasso_1d(np.empty(0), 1.0).size == 0


def test_fused_lasso_large_lam_gives_mean():
    rng = np.random.default_rng(6)
    y = rng.standard_normal(30)
    lam_max = np.max(np.abs(np.cumsum(y - y.mean())))
    x = fused_lasso_1d(y, lam_max + 1.0)
    np.testing.assert_allclose(x, np.full(30, y.mean()), atol=1e-10)


def test_fused_lasso_kkt_random_problems():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 201))
        y = rng.standard_normal(n) * rng.uniform(0.5, 3.0)
        if rng.random() < 0.3:  # piecewise-constant signal plus noise
            k = int(rng.integers(1, 4))
            jumps = np.sort(rng.choice(np.arange(1, n), size=min(k, n - 1), replace=False))
            levels = np.repeat(rng.standard_normal(jumps.size + 1) * 2, np.diff([0, *jumps, n]))
            y = levels + 0.2 * rng.standard_normal(n)
        lam = float(rng.uniform(0.01, 2.0))
        x = fused_lasso_1d(y, lam)
        check_fused_lasso_kkt(y, x, lam)


def test_fused_lasso_step_recovery():
    y = np.repeat([0.0, 4.0], 10)
    x = fused_lasso_1d(y, 0.5)
    # one jump survives, shrunk toward the middle by lam/segment-length
    np.testing.assert_allclose(x[:10], 0.05, atol=1e-10)
    np.testing.assert_allclose(x[10:], 3.95, atol=1e-10)


def test_cv_fused_lasso_constant_series_picks_largest_lam():
    y = np.full(12, 2.5)
    grid = np.array([0.1, 1.0, 10.0])
    x, best = cv_fused_lasso(y, grid)
    assert best == 10.0
    np.testing.assert_allclose(x, y, atol=1e-12)
    with pytest.raises(ValueError):
        cv_fused_lasso(y[:2], grid)
    with pytest.raises(ValueError):
        cv_fused_lasso(y, grid, folds=1)


def test_cv_fused_lasso_denoises_steps():
    rng = np.random.default_rng(8)
    truth = np.repeat([0.0, 3.0, -1.0], 20)
    y = truth + 0.3 * rng.standard_normal(60)
    x, best = cv_fused_lasso(y, np.logspace(-2, 1, 8))
    assert best > 0.01
    assert np.mean((x - truth) ** 2) < np.mean((y - truth) ** 2)


def test_fused_lasso_matrix_and_svd_wiring():
    rng = np.random.default_rng(9)
    Ys = rng.standard_normal((6, 3, 2))
    grid = np.array([0.05, 0.5])
    out = fused_lasso_matrix(Ys, grid, folds=3)
    for i in range(3):
        for j in range(2):
            ref, _ = cv_fused_lasso(Ys[:, i, j], grid, folds=3)
            np.testing.assert_array_equal(out[:, i, j], ref)
    combo = fused_lasso_svd(Ys, 1, grid, folds=3)
    np.testing.assert_allclose(combo, svd_per_time(out, 1), atol=1e-12)


# ----- CP ALS ----------------------------------------------------------------------


def test_cp_reconstruct_rank_one():
    u, v, w = np.array([[1.0], [2.0]]), np.array([[3.0], [1.0]]), np.array([[1.0], [-1.0]])
    out = cp_reconstruct([u, v, w])
    np.testing.assert_allclose(out, np.einsum("il,jl,kl->ijk", u, v, w), atol=1e-14)


def test_cp_als_exact_recovery_and_monotone():
    rng = np.random.default_rng(10)
    factors = [rng.standard_normal((n, 2)) for n in (6, 5, 4)]
    Y = cp_reconstruct(factors)
    fit_factors, trace = cp_als(Y, 2, iters=60, seed=3)
    assert trace[-1] < 1e-8 * np.linalg.norm(Y)
    np.testing.assert_allclose(cp_reconstruct(fit_factors), Y, atol=1e-6)
    # the factored residual formula cancels catastrophically near zero, so
    # allow float noise at the scale of ||Y|| * sqrt(eps)
    diffs = np.diff(trace)
    assert diffs.max() <= 1e-7 * np.linalg.norm(Y)


def test_cp_als_trace_matches_direct_residual():
    rng = np.random.default_rng(11)
    Y = rng.standard_normal((4, 3, 5))
    factors, trace = cp_als(Y, 2, iters=15, seed=0)
    direct = np.linalg.norm(Y - cp_reconstruct(factors))
    assert trace[-1] == pytest.approx(direct, abs=1e-8)
    assert np.diff(trace).max() <= 1e-9  # residual stays O(1); no cancellation


def test_cp_als_deterministic():
    rng = np.random.default_rng(12)
    Y = rng.standard_normal((3, 4, 3))
    f1, t1 = cp_als(Y, 2, iters=10, seed=5)
    f2, t2 = cp_als(Y, 2, iters=10, seed=5)
    assert t1 == t2
    for a, b in zip(f1, f2):
        np.testing.assert_array_equal(a, b)


def test_cp_per_time_wiring():
    rng = np.random.default_rng(13)
    Ys = rng.standard_normal((3, 4, 3, 2))
    out = cp_per_time(Ys, 2, iters=20, seed=9)
    ref = cp_reconstruct(cp_als(Ys[1], 2, iters=20, seed=10)[0])
    np.testing.assert_allclose(out[1], ref, atol=1e-12)


# ----- proximal gradient -------------------------------------------------------------


def test_pg_lam_zero_converges_to_data():
    rng = np.random.default_rng(14)
    y = rng.standard_normal(10)
    x, trace = l1_trendfilter_pg(y, 0.0, iters=4000)
    assert trace[-1] < 1e-8
    np.testing.assert_allclose(x, y, atol=1e-3)


def test_ista_monotone_descent():
    rng = np.random.default_rng(15)
    y = rng.standard_normal(25)
    _, trace = l1_trendfilter_pg(y, 0.7, iters=300)
    assert np.diff(trace).max() <= 1e-12


def test_fista_reaches_exact_optimum():
    rng = np.random.default_rng(16)
    y = np.repeat([0.0, 2.0, -1.0], 17)[:50] + 0.3 * rng.standard_normal(50)
    lam = 0.8
    exact = fused_lasso_objective(y, fused_lasso_1d(y, lam), lam)
    _, trace = l1_trendfilter_pg(y, lam, iters=5000, accelerated=True)
    assert trace[-1] <= exact + 1e-6
    assert trace[-1] >= exact - 1e-9  # never below the true optimum
