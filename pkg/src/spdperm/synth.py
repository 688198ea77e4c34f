"""Synthetic tensor cohorts: reference shapes, deformations, Wishart noise.

Two groups are produced by sampling around a reference tensor and around a
parametrically deformed copy of it. The deformation strength gamma runs
from 0 (identical centers, the null case) to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .permtest import Cohort
from .spd import SpdTensor, rotation_about

REGIMES = {
    "high": (5.0, 1.0, 0.5),
    "low": (3.0, 1.0, 1.0),
    "neariso": (1.3, 1.0, 1.0),
}

# Eigenvalue deformations; "co" rotates the frame instead, and the
# combined kinds apply both with the same gamma.
DEFORMATIONS = ("dl", "ir", "im", "co", "dl+co", "ir+co", "im+co")


def reference_tensor(regime: str) -> SpdTensor:
    """Diagonal reference tensor for an anisotropy regime.

    high -> diag(5, 1, 0.5); low -> diag(3, 1, 1); neariso -> diag(1.3, 1, 1).
    """
    try:
        lam = REGIMES[regime]
    except KeyError:
        raise ValueError(
            f"unknown regime {regime!r}; choose from {tuple(REGIMES)}"
        ) from None
    return SpdTensor(lam[0], lam[1], lam[2], 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DeformationSpec:
    """A deformation kind plus its strength gamma in [0, 1].

    Kinds: 'dl' shrinks the leading eigenvalue toward the second
    (lam1 -> lam1 - gamma*(lam1 - lam2)); 'ir' raises the two trailing
    eigenvalues toward the first (lam_j -> lam_j + gamma*(lam1 - lam_j)/2);
    'im' scales all eigenvalues by (1 + gamma); 'co' rotates the
    eigenframe by gamma*pi/2 about the third eigenvector; 'dl+co' etc.
    combine an eigenvalue change with the rotation at the same gamma.
    """

    kind: str
    gamma: float

    def __post_init__(self):
        if self.kind not in DEFORMATIONS:
            raise ValueError(
                f"unknown deformation {self.kind!r}; choose from {DEFORMATIONS}"
            )
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")


@dataclass(frozen=True)
class WishartNoise:
    """Wishart noise level: more degrees of freedom means less noise."""

    df: int = 10
    seed: int = 0

    def __post_init__(self):
        if int(self.df) != self.df or self.df < 4:
            raise ValueError(f"df must be an integer >= 4, got {self.df!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed!r}")


def deform(
    reference: SpdTensor, spec: DeformationSpec, rotation_axis: int = 2
) -> SpdTensor:
    """Apply a deformation to a reference tensor.

    Eigenvalue kinds act on the descending eigenvalues and keep the frame;
    'co' keeps the eigenvalues and rotates the frame about the reference
    eigenvector selected by ``rotation_axis`` (default the third, so the
    principal direction sweeps the plane of the first two).
    """
    dec = reference.spectral
    lam = dec.eigenvalues.copy()
    rot = dec.rotation
    gamma = spec.gamma
    base = spec.kind.split("+")[0]
    if base == "dl":
        lam[0] = lam[0] - gamma * (lam[0] - lam[1])
    elif base == "ir":
        lam[1] = lam[1] + gamma * (lam[0] - lam[1]) / 2.0
        lam[2] = lam[2] + gamma * (lam[0] - lam[2]) / 2.0
    elif base == "im":
        lam = (1.0 + gamma) * lam
    if "co" in spec.kind:
        axis = dec.rotation[:, rotation_axis]
        rot = rotation_about(axis, gamma * math.pi / 2.0) @ rot
    return SpdTensor.from_matrix(rot @ np.diag(lam) @ rot.T, symmetry_tol=1e-6)


def wishart_sample(
    center: SpdTensor, df: int, rng: np.random.Generator
) -> SpdTensor:
    """One draw X ~ Wishart(center/df, df), so E[X] = center.

    Uses the Bartlett decomposition: with center/df = L L^T and A lower
    triangular with chi-distributed diagonal (df, df-1, df-2 degrees of
    freedom) and standard-normal subdiagonal, X = (L A)(L A)^T. With
    df >= 4 the draw is almost surely SPD.
    """
    if df < 4:
        raise ValueError(f"df must be >= 4 for almost-surely SPD samples, got {df}")
    chol = np.linalg.cholesky(center.matrix / df)
    a = np.zeros((3, 3))
    a[0, 0] = math.sqrt(rng.chisquare(df))
    a[1, 1] = math.sqrt(rng.chisquare(df - 1))
    a[2, 2] = math.sqrt(rng.chisquare(df - 2))
    a[1, 0], a[2, 0], a[2, 1] = rng.standard_normal(3)
    m = chol @ a
    return SpdTensor.from_matrix(m @ m.T, symmetry_tol=1e-6)


def make_cohort(
    regime: str,
    spec: DeformationSpec,
    n_per_group: int = 10,
    noise: WishartNoise = WishartNoise(),
) -> Cohort:
    """Two-group cohort: samples around the reference and its deformation.

    Group 0 is drawn around the regime reference, group 1 around the
    deformed center (identical at gamma = 0). Each group uses its own RNG
    stream derived from (noise.seed, group index), so cohorts are
    reproducible and groups can be generated independently.
    """
    if n_per_group < 2:
        raise ValueError(f"n_per_group must be >= 2, got {n_per_group}")
    ref = reference_tensor(regime)
    centers = (ref, deform(ref, spec))
    tensors: list[SpdTensor] = []
    labels: list[int] = []
    for group, center in enumerate(centers):
        rng = np.random.default_rng(np.random.SeedSequence((noise.seed, group)))
        for _ in range(n_per_group):
            tensors.append(wishart_sample(center, noise.df, rng))
            labels.append(group)
    return Cohort(tuple(tensors), np.array(labels))
