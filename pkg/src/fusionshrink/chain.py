"""Exact Gaussian inference on chains with block-tridiagonal precision.

Each subject's latent trajectory is a length-T Gaussian chain: a zero-mean
random-walk prior with scalar transition precisions plus independent
per-time Gaussian evidence in natural (precision, shift) form.  The joint
precision over all T time points is block tridiagonal, so marginal means,
marginal covariances and adjacent cross-covariances come out of a
block-Thomas forward elimination / backward substitution in O(T d^3),
never materialising the (T d) x (T d) system.

All covariance outputs are explicitly symmetrised; the backward pass keeps
cross-covariances consistent with the marginals so that expected squared
transitions are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegeneratePosteriorError(ValueError):
    """Total chain precision is singular at some time block."""


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@dataclass
class GaussianChainPrior:
    """Zero-mean Gaussian chain prior.

    theta_1 ~ N(0, I/init_precision) and
    theta_{t+1} | theta_t ~ N(theta_t, I/transition_precisions[t]).

    A transition precision of zero detaches neighbours (infinite-variance
    step); init_precision of zero leaves the first point improper, which is
    allowed as long as the site evidence makes the total precision regular.
    """

    dim: int
    init_precision: float
    transition_precisions: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.transition_precisions = np.atleast_1d(
            np.asarray(self.transition_precisions, dtype=float)
        )
        if self.transition_precisions.ndim != 1:
            raise ValueError("transition_precisions must be one-dimensional")
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.init_precision < 0 or not np.isfinite(self.init_precision):
            raise ValueError("init_precision must be finite and nonnegative")
        if np.any(self.transition_precisions < 0) or not np.all(
            np.isfinite(self.transition_precisions)
        ):
            raise ValueError("transition precisions must be finite and nonnegative")

    @property
    def horizon(self) -> int:
        return self.transition_precisions.shape[0] + 1


@dataclass
class SitePotential:
    """Per-time Gaussian evidence for one chain, in natural form.

    precision: (T, d, d), symmetric PSD per time slice.
    shift: (T, d).

    The evidence at time t contributes exp(-0.5 x' P_t x + h_t' x).
    """

    precision: np.ndarray
    shift: np.ndarray

    def __post_init__(self) -> None:
        self.precision = np.asarray(self.precision, dtype=float)
        self.shift = np.asarray(self.shift, dtype=float)
        if self.precision.ndim != 3 or self.precision.shape[-1] != self.precision.shape[-2]:
            raise ValueError("precision must have shape (T, d, d)")
        if self.shift.shape != self.precision.shape[:2]:
            raise ValueError("shift must have shape (T, d) matching precision")

    def validate_psd(self, atol: float = 1e-8) -> None:
        asym = np.max(np.abs(self.precision - np.swapaxes(self.precision, -1, -2)))
        if asym > atol:
            raise ValueError(f"site precisions asymmetric by {asym:g}")
        w = np.linalg.eigvalsh(_sym(self.precision))
        if w.min() < -atol:
            raise ValueError(f"site precision has eigenvalue {w.min():g} < 0")


@dataclass
class ChainPosterior:
    """Marginals of the chain: means (T, d), covariances (T, d, d), and
    adjacent cross-covariances cross_cov[t] = Cov(theta_t, theta_{t+1})
    of shape (T-1, d, d)."""

    mean: np.ndarray
    cov: np.ndarray
    cross_cov: np.ndarray


def _chol_inverse(mats: np.ndarray) -> np.ndarray:
    """Batched SPD inverse; raises DegeneratePosteriorError.

    d <= 2 uses closed forms (the smoother calls this once per time step, so
    for tiny blocks the Cholesky call overhead would dominate the whole
    sweep); larger blocks go through Cholesky.
    """
    d = mats.shape[-1]
    if d == 1:
        a = mats[..., 0, 0]
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise DegeneratePosteriorError(
                "chain total precision is not positive definite"
            )
        return (1.0 / a)[..., None, None]
    if d == 2:
        a = mats[..., 0, 0]
        c = mats[..., 1, 1]
        b = 0.5 * (mats[..., 0, 1] + mats[..., 1, 0])
        det = a * c - b * b
        if (
            not (np.all(np.isfinite(a)) and np.all(np.isfinite(det)))
            or np.any(a <= 0)
            or np.any(det <= 0)
        ):
            raise DegeneratePosteriorError(
                "chain total precision is not positive definite"
            )
        out = np.empty_like(mats, dtype=float)
        inv_det = 1.0 / det
        out[..., 0, 0] = c * inv_det
        out[..., 0, 1] = -b * inv_det
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = a * inv_det
        return out
    try:
        chol = np.linalg.cholesky(_sym(mats))
    except np.linalg.LinAlgError as exc:
        raise DegeneratePosteriorError(
            "chain total precision is not positive definite"
        ) from exc
    linv = np.linalg.inv(chol)
    return _sym(np.swapaxes(linv, -1, -2) @ linv)


def smooth_core(
    rho0: np.ndarray,
    rho: np.ndarray,
    precision: np.ndarray,
    shift: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched block-Thomas smoother.

    Parameters
    ----------
    rho0 : (...,) initial precisions.
    rho : (..., T-1) transition precisions.
    precision : (..., T, d, d) site precisions.
    shift : (..., T, d) site shifts.

    Returns
    -------
    mean (..., T, d), cov (..., T, d, d), cross (..., T-1, d, d) with
    cross[..., t, :, :] = Cov(theta_t, theta_{t+1}).

    The leading axes are independent chains; the T loop is shared so the
    per-step linear algebra batches across all of them.
    """
    precision = np.asarray(precision, dtype=float)
    shift = np.asarray(shift, dtype=float)
    batch = precision.shape[:-3]
    T, d = precision.shape[-3], precision.shape[-1]
    rho0 = np.broadcast_to(np.asarray(rho0, dtype=float), batch)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), batch + (max(T - 1, 0),))

    eye = np.eye(d)
    # Diagonal blocks of the joint precision: site + prior couplings.
    diag_scale = np.zeros(batch + (T,))
    diag_scale[..., 0] += rho0
    if T > 1:
        diag_scale[..., 0] += rho[..., 0]
        diag_scale[..., -1] += rho[..., -1]
        if T > 2:
            diag_scale[..., 1:-1] += rho[..., :-1] + rho[..., 1:]
    dblocks = precision + diag_scale[..., None, None] * eye

    # Forward elimination: Schur complements and conditioned shifts.
    inv_dhat = np.empty(batch + (T, d, d))
    bhat = np.empty(batch + (T, d))
    inv_dhat[..., 0, :, :] = _chol_inverse(dblocks[..., 0, :, :])
    bhat[..., 0, :] = shift[..., 0, :]
    for t in range(1, T):
        r = rho[..., t - 1]
        prev_inv = inv_dhat[..., t - 1, :, :]
        dhat = dblocks[..., t, :, :] - (r**2)[..., None, None] * prev_inv
        inv_dhat[..., t, :, :] = _chol_inverse(dhat)
        bhat[..., t, :] = shift[..., t, :] + r[..., None] * np.einsum(
            "...ij,...j->...i", prev_inv, bhat[..., t - 1, :]
        )

    # Backward substitution: marginals and adjacent cross-covariances.
    mean = np.empty(batch + (T, d))
    cov = np.empty(batch + (T, d, d))
    cross = np.empty(batch + (max(T - 1, 0), d, d))
    cov[..., T - 1, :, :] = inv_dhat[..., T - 1, :, :]
    mean[..., T - 1, :] = np.einsum(
        "...ij,...j->...i", inv_dhat[..., T - 1, :, :], bhat[..., T - 1, :]
    )
    for t in range(T - 2, -1, -1):
        r = rho[..., t]
        inv_t = inv_dhat[..., t, :, :]
        gain = r[..., None, None] * inv_t
        mean[..., t, :] = np.einsum(
            "...ij,...j->...i", inv_t, bhat[..., t, :]
        ) + np.einsum("...ij,...j->...i", gain, mean[..., t + 1, :])
        cov_next = cov[..., t + 1, :, :]
        cross[..., t, :, :] = gain @ cov_next
        cov[..., t, :, :] = _sym(inv_t + gain @ cov_next @ np.swapaxes(gain, -1, -2))
    return mean, cov, cross


def chain_smooth(prior: GaussianChainPrior, sites: SitePotential) -> ChainPosterior:
    """Posterior marginals of one Gaussian chain given per-time evidence."""
    T = sites.precision.shape[0]
    if prior.horizon != T:
        raise ValueError(
            f"prior horizon {prior.horizon} does not match sites T={T}"
        )
    if sites.precision.shape[-1] != prior.dim:
        raise ValueError("site dimension does not match prior dim")
    mean, cov, cross = smooth_core(
        np.asarray(prior.init_precision),
        prior.transition_precisions,
        sites.precision,
        sites.shift,
    )
    return ChainPosterior(mean=mean, cov=cov, cross_cov=cross)


def expected_transition_sq(post: ChainPosterior, t: int) -> float:
    """E||theta_t - theta_{t+1}||^2 under the chain posterior (t zero-based)."""
    diff = post.mean[t] - post.mean[t + 1]
    return float(
        diff @ diff
        + np.trace(post.cov[t])
        + np.trace(post.cov[t + 1])
        - 2.0 * np.trace(post.cross_cov[t])
    )


def all_expected_transition_sq(
    mean: np.ndarray, cov: np.ndarray, cross: np.ndarray
) -> np.ndarray:
    """Vectorised E||theta_t - theta_{t+1}||^2 over batched chains.

    mean (..., T, d), cov (..., T, d, d), cross (..., T-1, d, d) ->
    (..., T-1).
    """
    diff = mean[..., :-1, :] - mean[..., 1:, :]
    tr = np.trace(cov, axis1=-2, axis2=-1)
    return (
        np.sum(diff**2, axis=-1)
        + tr[..., :-1]
        + tr[..., 1:]
        - 2.0 * np.trace(cross, axis1=-2, axis2=-1)
    )


def dense_joint_oracle(
    prior: GaussianChainPrior, sites: SitePotential
) -> ChainPosterior:
    """Reference smoother: build and invert the full (T d) x (T d) precision.

    Guarded to T*d <= 64; used by tests as the independent check on
    chain_smooth.
    """
    T = sites.precision.shape[0]
    d = prior.dim
    if T * d > 64:
        raise ValueError("dense oracle is limited to T*d <= 64")
    if prior.horizon != T:
        raise ValueError("prior horizon does not match sites")
    joint = np.zeros((T * d, T * d))
    hvec = np.zeros(T * d)
    eye = np.eye(d)
    for t in range(T):
        sl = slice(t * d, (t + 1) * d)
        joint[sl, sl] += sites.precision[t]
        hvec[sl] = sites.shift[t]
    joint[:d, :d] += prior.init_precision * eye
    for t in range(T - 1):
        r = prior.transition_precisions[t]
        a = slice(t * d, (t + 1) * d)
        b = slice((t + 1) * d, (t + 2) * d)
        joint[a, a] += r * eye
        joint[b, b] += r * eye
        joint[a, b] -= r * eye
        joint[b, a] -= r * eye
    sign, _ = np.linalg.slogdet(joint)
    if sign <= 0:
        raise DegeneratePosteriorError("dense joint precision is singular")
    cov_joint = np.linalg.inv(joint)
    cov_joint = 0.5 * (cov_joint + cov_joint.T)
    mu = cov_joint @ hvec
    mean = mu.reshape(T, d)
    cov = np.empty((T, d, d))
    cross = np.empty((max(T - 1, 0), d, d))
    for t in range(T):
        sl = slice(t * d, (t + 1) * d)
        cov[t] = cov_joint[sl, sl]
        if t + 1 < T:
            cross[t] = cov_joint[sl, (t + 1) * d : (t + 2) * d]
    return ChainPosterior(mean=mean, cov=cov, cross_cov=cross)
