"""Benchmark runners for the simulation scenarios.

Each runner generates `replicates` datasets (replicate r uses seed + r),
fits every requested method, and returns one row dict per
(replicate, method) ready for dataio.write_results_csv.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .baselines import (
    cp_per_time,
    fused_lasso_matrix,
    fused_lasso_svd,
    svd_per_time,
    svd_windowed_all,
)
from .engine import FitResult, ModelConfig, fit, predict_mean
from .metrics import pcc, rmse, transition_norm_heatmap
from .postprocess import kmeans_rows, rand_index, row_normalize, sequential_align
from .simulate import (
    SyntheticDataset,
    gen_case1,
    gen_case2_network,
    gen_case3_tensor,
    gen_cluster_case,
    gen_two_movers,
)

DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-2.0, 1.5, 10))


def _row(scenario: str, method: str, r: int, seed: int, metric: str, value: float):
    return {
        "scenario": scenario,
        "method": method,
        "replicate": r,
        "seed": seed,
        "metric": metric,
        "value": float(value),
    }


def _config(d: int, seed: int, overrides: dict | None, **kwargs) -> ModelConfig:
    cfg = ModelConfig(d=d, seed=seed, **kwargs)
    return replace(cfg, **overrides) if overrides else cfg


def _predict_stack(result: FitResult) -> np.ndarray:
    T = result.modes[0].mean.shape[1]
    return np.stack([predict_mean(result, t) for t in range(T)])


def run_case1(
    n: int = 20,
    p: int = 20,
    T: int = 100,
    d: int = 2,
    rho: float = 0.95,
    sigma: float = 0.3,
    replicates: int = 10,
    seed: int = 0,
    methods: tuple[str, ...] = ("ffs", "svd1", "svd2", "flasso1", "flasso2"),
    lam_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID,
    overrides: dict | None = None,
) -> list[dict]:
    """Gaussian matrix scenario; metric is RMSE against the true means."""
    rows = []
    grid = np.asarray(lam_grid)
    for r in range(replicates):
        s = seed + r
        data = gen_case1(n, p, T, d=d, rho=rho, sigma=sigma, seed=s)
        Y = data.observations.values
        for method in methods:
            if method == "ffs":
                est = _predict_stack(fit(data.observations, _config(d, s, overrides)))
            elif method == "svd1":
                est = svd_per_time(Y, d)
            elif method == "svd2":
                est = svd_windowed_all(Y)
            elif method == "flasso1":
                est = fused_lasso_matrix(Y, grid)
            elif method == "flasso2":
                est = fused_lasso_svd(Y, d, grid)
            else:
                raise ValueError(f"unknown method '{method}'")
            rows.append(_row("case1", method, r, s, "rmse", rmse(est, data.truth_means)))
    return rows


def _offdiag_pcc(est: np.ndarray, truth: np.ndarray) -> float:
    n = truth.shape[1]
    off = ~np.eye(n, dtype=bool)
    return pcc(est[:, off], truth[:, off])


def run_case2(
    n: int = 20,
    T: int = 100,
    d: int = 2,
    rho: float = 0.9,
    replicates: int = 10,
    seed: int = 0,
    methods: tuple[str, ...] = ("ffs", "iglsm", "svd1", "svd2"),
    overrides: dict | None = None,
) -> list[dict]:
    """Binary network scenario; metric is the Pearson correlation between
    estimated and true link probabilities over off-diagonal dyads.  The
    SVD baselines correlate their low-rank adjacency approximations
    directly (correlation is affine invariant, so no link rescaling)."""
    rows = []
    for r in range(replicates):
        s = seed + r
        data = gen_case2_network(n, T, rho=rho, seed=s)
        Y = data.observations.values
        for method in methods:
            if method == "ffs":
                est = _predict_stack(fit(data.observations, _config(d, s, overrides)))
            elif method == "iglsm":
                est = _predict_stack(
                    fit(data.observations, _config(d, s, overrides, prior="iglsm"))
                )
            elif method == "svd1":
                est = svd_per_time(Y, d)
            elif method == "svd2":
                est = svd_windowed_all(Y)
            else:
                raise ValueError(f"unknown method '{method}'")
            rows.append(
                _row("case2", method, r, s, "pcc", _offdiag_pcc(est, data.truth_means))
            )
    return rows


def run_case3(
    dims: tuple[int, int, int] = (10, 10, 10),
    T: int = 100,
    d: int = 2,
    rho: float = 0.99,
    replicates: int = 5,
    seed: int = 0,
    methods: tuple[str, ...] = ("ffs", "cp"),
    overrides: dict | None = None,
) -> list[dict]:
    """Order-3 tensor scenario; metric is RMSE against the true means."""
    rows = []
    for r in range(replicates):
        s = seed + r
        data = gen_case3_tensor(tuple(dims), T, rho=rho, seed=s)
        for method in methods:
            if method == "ffs":
                est = _predict_stack(fit(data.observations, _config(d, s, overrides)))
            elif method == "cp":
                est = cp_per_time(data.observations.values, d, seed=s)
            else:
                raise ValueError(f"unknown method '{method}'")
            rows.append(_row("case3", method, r, s, "rmse", rmse(est, data.truth_means)))
    return rows


def cluster_labels_over_time(
    trajectory: np.ndarray, k: int, seed: int = 0, restarts: int = 10
) -> np.ndarray:
    """Normalise rows, resolve rotations sequentially, then k-means each
    time slice.  trajectory is (n, T, d); returns labels (T, n)."""
    paths = trajectory.transpose(1, 0, 2)  # (T, n, d)
    aligned, _ = sequential_align(row_normalize(paths))
    T = aligned.shape[0]
    labels = np.empty((T, aligned.shape[1]), dtype=int)
    for t in range(T):
        labels[t], _, _ = kmeans_rows(aligned[t], k, restarts=restarts, seed=seed)
    return labels


def mean_rand_index(data: SyntheticDataset, result: FitResult, k: int) -> float:
    labels = cluster_labels_over_time(
        result.modes[0].mean, k, seed=result.config.seed
    )
    values = [
        rand_index(labels[t], data.truth_labels[t]) for t in range(labels.shape[0])
    ]
    return float(np.mean(values))


def run_cluster(
    n: int = 40,
    T: int = 100,
    d: int = 2,
    p_stay: float = 0.95,
    k: int = 4,
    replicates: int = 5,
    seed: int = 0,
    methods: tuple[str, ...] = ("ffs", "iglsm"),
    overrides: dict | None = None,
) -> list[dict]:
    """Community network scenario; metric is the Rand index between the
    per-time k-means labels of the fitted positions and the true corner
    assignments, averaged over time.  Both arms fit an intercept because
    the generator's link has one.

    Both arms run an identical fixed budget of 200 sweeps rather than the
    engine's metric-plateau rule: training AUC saturates on these well
    separated networks long before the factor trajectories settle, and the
    two priors plateau at very different rates, so early stopping would
    compare half-converged fits."""
    rows = []
    for r in range(replicates):
        s = seed + r
        data = gen_cluster_case(n, T, p_stay=p_stay, seed=s)
        for method in methods:
            if method not in ("ffs", "iglsm"):
                raise ValueError(f"unknown method '{method}'")
            cfg = _config(
                d,
                s,
                overrides,
                prior=method,
                intercept=True,
                inner_iters=1,
                tol_auc=0.0,
                max_cycles=200,
            )
            result = fit(data.observations, cfg)
            rows.append(
                _row("cluster", method, r, s, "rand_index", mean_rand_index(data, result, k))
            )
    return rows


def mover_scores(result: FitResult) -> np.ndarray:
    """Per-subject movement score: the largest one-step transition norm of
    the rotation-aligned fitted trajectory.  Alignment is essential; raw
    posterior means carry per-time rotation drift that shows up as
    spurious movement for every subject."""
    aligned, _ = sequential_align(result.modes[0].mean.transpose(1, 0, 2))
    heat = transition_norm_heatmap(aligned)
    return heat.max(axis=1)


def run_two_movers(
    n: int = 10,
    T: int = 100,
    d: int = 2,
    transit_prob: float = 0.05,
    replicates: int = 10,
    seed: int = 0,
    overrides: dict | None = None,
) -> list[dict]:
    """Localisation probe: value 1.0 when the two largest movement scores
    belong to the two genuinely moving subjects (rows 0 and 1)."""
    rows = []
    for r in range(replicates):
        s = seed + r
        data = gen_two_movers(n, T, transit_prob=transit_prob, seed=s)
        result = fit(data.observations, _config(d, s, overrides))
        top2 = set(np.argsort(mover_scores(result))[-2:].tolist())
        rows.append(_row("two_movers", "ffs", r, s, "top2_correct", float(top2 == {0, 1})))
    return rows


SCENARIOS = {
    "case1": run_case1,
    "case2": run_case2,
    "case3": run_case3,
    "cluster": run_cluster,
    "two_movers": run_two_movers,
}
