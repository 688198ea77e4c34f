"""Notions of mean for collections of SPD tensors.

Provides the arithmetic (Euclidean) mean, the log-Euclidean mean, the
spectral-quaternion mean (geometric eigenvalue mean + chordal frame mean)
and the iterative Karcher mean under the affine-invariant metric.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateMean, EmptyInput, NoConvergence
from .spd import SpdTensor, UnitQuaternion, quaternion_to_rotation

MEAN_KINDS = ("arithmetic", "le", "sq", "karcher")

_ALIGNMENT_SWEEPS = 100


def mean_arithmetic(tensors: Sequence[SpdTensor]) -> SpdTensor:
    """Elementwise average; SPD because the SPD cone is convex."""
    if not tensors:
        raise EmptyInput("mean of an empty collection")
    m = np.mean([t.matrix for t in tensors], axis=0)
    return SpdTensor.from_matrix(m)


def mean_log_euclidean(tensors: Sequence[SpdTensor]) -> SpdTensor:
    """exp of the average matrix logarithm.

    This is the closed-form Riemannian mean for the log-Euclidean metric;
    for commuting tensors it reduces to the eigenvalue-wise geometric mean.
    """
    if not tensors:
        raise EmptyInput("mean of an empty collection")
    m = np.mean([t.log_matrix for t in tensors], axis=0)
    return _expm(m)


def chordal_mean_quaternions(quaternions: Sequence[UnitQuaternion]) -> UnitQuaternion:
    """Sign-aligned Euclidean average of unit quaternions, renormalized.

    Minimizes sum_i min(||q - q_i||^2, ||q + q_i||^2) by coordinate descent:
    start from the first element, align every quaternion's sign to the
    running mean, average, renormalize, and repeat until the sign pattern
    is stable. Raises DegenerateMean when the aligned sum nearly cancels
    (no meaningful average direction exists).
    """
    if not quaternions:
        raise EmptyInput("mean of an empty collection")
    arr = np.array([q.as_array() for q in quaternions])
    mean = arr[0]
    signs = None
    for _ in range(_ALIGNMENT_SWEEPS):
        dots = arr @ mean
        new_signs = np.where(dots < 0.0, -1.0, 1.0)
        summed = (arr * new_signs[:, None]).sum(axis=0)
        norm = float(np.linalg.norm(summed))
        if norm < 1e-8:
            raise DegenerateMean(
                f"aligned quaternion sum has norm {norm!r}; no average direction"
            )
        mean = summed / norm
        if signs is not None and np.array_equal(signs, new_signs):
            break
        signs = new_signs
    return UnitQuaternion.from_array(mean)


def mean_spectral_quaternion(tensors: Sequence[SpdTensor]) -> SpdTensor:
    """Geometric mean of ordered eigenvalue slots in a chordal-mean frame.

    The i-th eigenvalue of the result is the geometric mean of the cohort's
    i-th eigenvalues; the frame is the chordal mean of the canonical
    eigenframe quaternions.
    """
    if not tensors:
        raise EmptyInput("mean of an empty collection")
    lam = np.array([t.spectral.eigenvalues for t in tensors])
    lam_mean = np.exp(np.log(lam).mean(axis=0))
    q_mean = chordal_mean_quaternions([t.spectral.quaternion for t in tensors])
    r = quaternion_to_rotation(q_mean)
    return SpdTensor.from_matrix(r @ np.diag(lam_mean) @ r.T, symmetry_tol=1e-6)


def mean_karcher(
    tensors: Sequence[SpdTensor],
    metric: str = "affine-invariant",
    tol: float = 1e-10,
    max_iter: int = 100,
) -> SpdTensor:
    """Fréchet mean minimizing the sum of squared geodesic distances.

    For the log-Euclidean metric the minimizer is the closed-form
    log-Euclidean mean. For the affine-invariant metric it is found by the
    fixed-point iteration

        mu <- mu^(1/2) exp( mean_i log(mu^(-1/2) x_i mu^(-1/2)) ) mu^(1/2)

    started at the arithmetic mean and stopped when the relative Frobenius
    step norm falls below ``tol``. At convergence the tangent-space mean
    of the data (the Fréchet first-order condition) is zero to tolerance.
    """
    if not tensors:
        raise EmptyInput("mean of an empty collection")
    if tol <= 0.0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")
    if metric in ("logeuclidean", "le", "log-euclidean"):
        return mean_log_euclidean(tensors)
    if metric not in ("affine-invariant", "affine", "ai"):
        raise ValueError(f"unknown metric {metric!r}")

    mats = [t.matrix for t in tensors]
    mu = np.mean(mats, axis=0)
    step_norm = np.inf
    for _ in range(max_iter):
        w, v = np.linalg.eigh(mu)
        inv_sqrt = v @ np.diag(w**-0.5) @ v.T
        sqrt = v @ np.diag(w**0.5) @ v.T
        tangent = np.mean([_logm_sym(inv_sqrt @ m @ inv_sqrt) for m in mats], axis=0)
        mu_next = sqrt @ _expm_sym(tangent) @ sqrt
        mu_next = 0.5 * (mu_next + mu_next.T)
        step_norm = float(np.linalg.norm(mu_next - mu) / np.linalg.norm(mu))
        mu = mu_next
        if step_norm < tol:
            return SpdTensor.from_matrix(mu, symmetry_tol=1e-6)
    raise NoConvergence(
        f"Karcher iteration did not reach tol={tol!r} in {max_iter} steps "
        f"(last relative step {step_norm!r})",
        last_iterate=SpdTensor.from_matrix(mu, symmetry_tol=1e-6),
        step_norm=step_norm,
    )


def karcher_gradient_norm(tensors: Sequence[SpdTensor], at: SpdTensor) -> float:
    """Norm of the affine-invariant tangent mean at a candidate point.

    Zero (to tolerance) exactly at the Karcher mean; useful for verifying
    stationarity of a computed mean.
    """
    w, v = np.linalg.eigh(at.matrix)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.T
    tangent = np.mean(
        [_logm_sym(inv_sqrt @ t.matrix @ inv_sqrt) for t in tensors], axis=0
    )
    return float(np.linalg.norm(tangent))


def _logm_sym(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return v @ np.diag(np.log(w)) @ v.T


def _expm_sym(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return v @ np.diag(np.exp(w)) @ v.T


def _expm(m: np.ndarray) -> SpdTensor:
    return SpdTensor.from_matrix(_expm_sym(m), symmetry_tol=1e-6)


def mean_by_kind(tensors: Sequence[SpdTensor], kind: str) -> SpdTensor:
    """Dispatch helper for the CLI: arithmetic | le | sq | karcher."""
    if kind == "arithmetic":
        return mean_arithmetic(tensors)
    if kind == "le":
        return mean_log_euclidean(tensors)
    if kind == "sq":
        return mean_spectral_quaternion(tensors)
    if kind == "karcher":
        return mean_karcher(tensors)
    raise ValueError(f"unknown mean kind {kind!r}; choose from {MEAN_KINDS}")
