"""Core 3x3 SPD tensor type and its spectral machinery.

A tensor is stored as its six independent components. Everything else
(eigendecomposition, quaternion frame, matrix log, fractional anisotropy)
is derived lazily and cached, so repeated similarity evaluations over the
same cohort pay for one decomposition per tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import NonFinite, NotARotation, NotPositiveDefinite

# Eigenvalues below this fraction of the largest one are treated as zero:
# such tensors are numerically singular and break the matrix logarithm.
EIGENVALUE_FLOOR = 1e-12

COMPONENT_NAMES = ("xx", "yy", "zz", "xy", "xz", "yz")


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion (w, x, y, z) in canonical sign.

    The constructor renormalizes (inputs must already be within 1e-6 of
    unit norm) and fixes the sign so that w >= 0, breaking the w == 0 tie
    by making the first nonzero of (x, y, z) positive. As a consequence
    q and -q construct the same object.
    """

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        try:
            comps = tuple(float(c) for c in (self.w, self.x, self.y, self.z))
        except (TypeError, ValueError) as exc:
            raise NonFinite("quaternion components must be real numbers") from exc
        if not all(math.isfinite(c) for c in comps):
            raise NonFinite(f"quaternion components must be finite, got {comps}")
        norm = math.sqrt(sum(c * c for c in comps))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {norm!r} is not 1 within 1e-6")
        w, x, y, z = (c / norm for c in comps)
        if w < 0.0 or (w == 0.0 and _first_nonzero_negative((x, y, z))):
            w, x, y, z = -w, -x, -y, -z
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, q: np.ndarray) -> "UnitQuaternion":
        return cls(float(q[0]), float(q[1]), float(q[2]), float(q[3]))


def _first_nonzero_negative(values) -> bool:
    for v in values:
        if v != 0.0:
            return v < 0.0
    return False


@dataclass(frozen=True)
class SpdTensor:
    """A 3x3 symmetric positive-definite tensor.

    Only the six independent components are stored; symmetry holds by
    construction. Positive-definiteness is validated on construction
    (smallest eigenvalue must exceed ``EIGENVALUE_FLOOR`` times the
    largest). Instances are immutable and safe to share across threads.

    Component convention: xy = entry (1,2), xz = entry (1,3),
    yz = entry (2,3) of the full matrix.
    """

    xx: float
    yy: float
    zz: float
    xy: float
    xz: float
    yz: float

    def __post_init__(self):
        try:
            comps = tuple(float(getattr(self, name)) for name in COMPONENT_NAMES)
        except (TypeError, ValueError) as exc:
            raise NonFinite(f"tensor components must be real numbers") from exc
        if not all(math.isfinite(c) for c in comps):
            raise NonFinite(f"tensor components must be finite, got {comps}")
        for name, value in zip(COMPONENT_NAMES, comps):
            object.__setattr__(self, name, value)
        evals = np.linalg.eigvalsh(self.matrix)
        if evals[0] <= EIGENVALUE_FLOOR * max(evals[2], 0.0):
            raise NotPositiveDefinite(
                f"eigenvalues {tuple(evals)} are not all strictly positive"
            )

    @cached_property
    def matrix(self) -> np.ndarray:
        """The full symmetric 3x3 matrix (read-only view)."""
        m = np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )
        m.flags.writeable = False
        return m

    @cached_property
    def spectral(self) -> "SpectralDecomposition":
        return spectral_decompose(self)

    @cached_property
    def fractional_anisotropy(self) -> float:
        lam = self.spectral.eigenvalues
        dev = lam - lam.mean()
        fa = math.sqrt(1.5) * float(np.linalg.norm(dev)) / float(np.linalg.norm(lam))
        return min(fa, 1.0)

    @cached_property
    def log_matrix(self) -> np.ndarray:
        """Matrix logarithm, computed through the spectral decomposition."""
        dec = self.spectral
        m = dec.rotation @ np.diag(np.log(dec.eigenvalues)) @ dec.rotation.T
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        return m

    def components(self) -> tuple[float, float, float, float, float, float]:
        return (self.xx, self.yy, self.zz, self.xy, self.xz, self.yz)

    @classmethod
    def from_matrix(cls, m: np.ndarray, symmetry_tol: float = 1e-8) -> "SpdTensor":
        """Build a tensor from a (numerically) symmetric 3x3 matrix."""
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        asym = np.linalg.norm(m - m.T)
        scale = max(np.linalg.norm(m), 1.0)
        if asym > symmetry_tol * scale:
            raise ValueError(f"matrix is not symmetric (asymmetry {asym!r})")
        s = 0.5 * (m + m.T)
        return cls(s[0, 0], s[1, 1], s[2, 2], s[0, 1], s[0, 2], s[1, 2])


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order plus a proper-rotation eigenframe.

    ``rotation`` columns are the eigenvectors matching ``eigenvalues``;
    ``quaternion`` encodes the same rotation in canonical sign.
    """

    eigenvalues: np.ndarray
    rotation: np.ndarray
    quaternion: UnitQuaternion

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        rot = np.array(self.rotation, dtype=float)
        if not (lam[0] >= lam[1] >= lam[2] > 0.0):
            raise ValueError(f"eigenvalues {tuple(lam)} not descending positive")
        if np.abs(rot.T @ rot - np.eye(3)).max() > 1e-8:
            raise NotARotation("eigenframe is not orthogonal")
        if abs(np.linalg.det(rot) - 1.0) > 1e-8:
            raise NotARotation("eigenframe is not a proper rotation")
        lam.flags.writeable = False
        rot.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "rotation", rot)

    def reconstruct(self) -> np.ndarray:
        return self.rotation @ np.diag(self.eigenvalues) @ self.rotation.T


def validate_spd(components: Sequence[float]) -> SpdTensor:
    """Validate six components (xx, yy, zz, xy, xz, yz) into a tensor."""
    if len(components) != 6:
        raise ValueError(f"expected 6 components, got {len(components)}")
    return SpdTensor(*components)


def spectral_decompose(t: SpdTensor) -> SpectralDecomposition:
    """Eigendecompose a tensor with a deterministic frame convention.

    Eigenvalues are sorted descending. Each eigenvector's sign is fixed by
    making its largest-magnitude entry positive; if the resulting frame has
    determinant -1, the third eigenvector is flipped to restore a proper
    rotation. This keeps degenerate (near-isotropic) inputs reproducible.
    """
    w, v = np.linalg.eigh(t.matrix)
    lam = w[::-1].copy()
    vecs = v[:, ::-1].copy()
    for j in range(3):
        k = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[k, j] < 0.0:
            vecs[:, j] = -vecs[:, j]
    if np.linalg.det(vecs) < 0.0:
        vecs[:, 2] = -vecs[:, 2]
    return SpectralDecomposition(
        eigenvalues=lam, rotation=vecs, quaternion=rotation_to_quaternion(vecs)
    )


def rotation_to_quaternion(r: np.ndarray, tol: float = 1e-8) -> UnitQuaternion:
    """Convert a proper rotation matrix to its canonical unit quaternion.

    Uses the Shepperd branching on the largest diagonal combination for
    numerical robustness at all rotation angles.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or np.abs(r.T @ r - np.eye(3)).max() > tol:
        raise NotARotation("matrix is not orthogonal within tolerance")
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise NotARotation("matrix has determinant != +1")
    trace = r[0, 0] + r[1, 1] + r[2, 2]
    if trace > 0.0:
        s = 2.0 * math.sqrt(trace + 1.0)
        w = 0.25 * s
        x = (r[2, 1] - r[1, 2]) / s
        y = (r[0, 2] - r[2, 0]) / s
        z = (r[1, 0] - r[0, 1]) / s
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        w = (r[2, 1] - r[1, 2]) / s
        x = 0.25 * s
        y = (r[0, 1] + r[1, 0]) / s
        z = (r[0, 2] + r[2, 0]) / s
    elif r[1, 1] >= r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        w = (r[0, 2] - r[2, 0]) / s
        x = (r[0, 1] + r[1, 0]) / s
        y = 0.25 * s
        z = (r[1, 2] + r[2, 1]) / s
    else:
        s = 2.0 * math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        w = (r[1, 0] - r[0, 1]) / s
        x = (r[0, 2] + r[2, 0]) / s
        y = (r[1, 2] + r[2, 1]) / s
        z = 0.25 * s
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    return UnitQuaternion(w / norm, x / norm, y / norm, z / norm)


def quaternion_to_rotation(q: UnitQuaternion) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation by ``angle`` (radians) about a 3-vector axis."""
    u = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise ValueError("rotation axis must be nonzero")
    u = u / norm
    k = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def log_spd(t: SpdTensor) -> np.ndarray:
    """Matrix logarithm of an SPD tensor (a symmetric 3x3 matrix)."""
    return t.log_matrix


def exp_sym(m: np.ndarray) -> SpdTensor:
    """Matrix exponential of a symmetric 3x3 matrix; always SPD."""
    m = np.asarray(m, dtype=float)
    if np.abs(m - m.T).max() > 1e-8 * max(np.abs(m).max(), 1.0):
        raise ValueError("exp_sym expects a symmetric matrix")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return SpdTensor.from_matrix(v @ np.diag(np.exp(w)) @ v.T, symmetry_tol=1e-6)


def fractional_anisotropy(t: SpdTensor) -> float:
    """Fractional anisotropy: sqrt(3/2) * ||lam - mean(lam)|| / ||lam||.

    Zero for isotropic tensors, approaching one as the spectrum collapses
    onto a single dominant eigenvalue. Invariant under rotation and under
    uniform positive scaling.
    """
    return t.fractional_anisotropy
