"""Permutation engine plus the dispersion and mean-difference statistics.

The dispersion statistic is the weighted mean of within-group average
pairwise dissimilarities; small observed values (relative to relabelings)
indicate groups that are internally tighter than random splits, so its
test is lower-tailed. The mean-difference statistic is the distance
between the two group means and is upper-tailed.

p-value conventions
-------------------
Monte Carlo draws relabelings uniformly with replacement and uses the
+1-corrected estimator p = (1 + #beats) / (1 + n_draws), where ties count
as beats. Full enumeration visits every distinct group assignment exactly
once; the observed labeling is one of them and beats itself, so
p = #beats / n_assignments carries the same correction built in. Either
way p is never zero and lies in [1/(1 + n), 1].
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    BadWeights,
    EmptyInput,
    EnumerationTooLarge,
    GroupTooSmall,
    MeasurePairingError,
)
from .means import mean_arithmetic, mean_log_euclidean, mean_spectral_quaternion
from .similarity import (
    Measure,
    dist_euclidean,
    dist_log_euclidean,
    dist_spectral_quaternion,
    similarity_matrix,
)
from .spd import SpdTensor

_BATCH_CHUNK = 32768


@dataclass(frozen=True)
class Cohort:
    """A labeled population of tensors partitioned into groups."""

    tensors: tuple[SpdTensor, ...]
    labels: np.ndarray

    def __post_init__(self):
        if not self.tensors:
            raise EmptyInput("cohort must contain at least one tensor")
        labels = np.array(self.labels, dtype=int)
        if labels.shape != (len(self.tensors),):
            raise ValueError(
                f"labels shape {labels.shape} does not match {len(self.tensors)} tensors"
            )
        labels.flags.writeable = False
        object.__setattr__(self, "tensors", tuple(self.tensors))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def group_ids(self) -> np.ndarray:
        return np.unique(self.labels)

    @property
    def group_sizes(self) -> np.ndarray:
        return np.array([int(np.sum(self.labels == g)) for g in self.group_ids])

    def group_indices(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == g) for g in self.group_ids]

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[SpdTensor]]) -> "Cohort":
        tensors: list[SpdTensor] = []
        labels: list[int] = []
        for g, members in enumerate(groups):
            tensors.extend(members)
            labels.extend([g] * len(members))
        return cls(tuple(tensors), np.array(labels))


@dataclass(frozen=True)
class MonteCarlo:
    """Sample relabelings uniformly with replacement (Fisher-Yates per draw)."""

    n_permutations: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.n_permutations < 1:
            raise ValueError("n_permutations must be >= 1")


@dataclass(frozen=True)
class FullEnumeration:
    """Visit all N!/prod(n_i!) distinct assignments, capped for safety."""

    cap: int = 200_000


PermutationScheme = Union[MonteCarlo, FullEnumeration]


def n_assignments(group_sizes: Sequence[int]) -> int:
    """Number of distinct label assignments N! / prod(n_i!)."""
    total = sum(group_sizes)
    count = math.factorial(total)
    for n in group_sizes:
        count //= math.factorial(n)
    return count


def enumerate_labelings(labels: np.ndarray) -> np.ndarray:
    """All distinct group assignments as an (M, N) label matrix.

    Rows appear in a deterministic lexicographic order over which indices
    receive each group id (ids in sorted order).
    """
    labels = np.asarray(labels)
    ids = np.unique(labels)
    sizes = [int(np.sum(labels == g)) for g in ids]
    n = labels.shape[0]
    rows: list[np.ndarray] = []
    row = np.empty(n, dtype=labels.dtype)

    def assign(free: tuple[int, ...], which: int) -> None:
        if which == len(ids) - 1:
            row[list(free)] = ids[which]
            rows.append(row.copy())
            return
        for chosen in itertools.combinations(free, sizes[which]):
            row[list(chosen)] = ids[which]
            remaining = tuple(i for i in free if i not in chosen)
            assign(remaining, which + 1)

    assign(tuple(range(n)), 0)
    return np.array(rows)


def draw_labelings(
    scheme: PermutationScheme, labels: np.ndarray
) -> tuple[np.ndarray, str]:
    """Materialize the permutation set for a scheme.

    Returns (matrix, mode) where matrix is (B, N) and mode is
    'montecarlo' or 'enumeration'.
    """
    labels = np.asarray(labels)
    if isinstance(scheme, FullEnumeration):
        ids = np.unique(labels)
        m = n_assignments([int(np.sum(labels == g)) for g in ids])
        if m > scheme.cap:
            raise EnumerationTooLarge(
                f"{m} assignments exceed the enumeration cap {scheme.cap}"
            )
        return enumerate_labelings(labels), "enumeration"
    rng = np.random.default_rng(scheme.seed)
    tiled = np.tile(labels, (scheme.n_permutations, 1))
    return rng.permuted(tiled, axis=1), "montecarlo"


@dataclass(frozen=True)
class TestResult:
    """Outcome of a permutation test.

    ``degenerate`` flags a flat null distribution (all permuted values
    identical), in which case p is reported as 1.
    """

    observed: float
    p_value: float
    tail: str
    n_permutations: int
    mode: str
    degenerate: bool = False
    null: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "observed": self.observed,
            "p_value": self.p_value,
            "tail": self.tail,
            "n_permutations": self.n_permutations,
            "mode": self.mode,
            "degenerate": self.degenerate,
        }


def permutation_p_value(
    observed: float, null: np.ndarray, tail: str, mode: str
) -> tuple[float, bool]:
    """p-value per the module conventions; returns (p, degenerate)."""
    if tail == "lower":
        beats = int(np.sum(null <= observed))
    elif tail == "upper":
        beats = int(np.sum(null >= observed))
    else:
        raise ValueError(f"tail must be 'lower' or 'upper', got {tail!r}")
    if null.size > 0 and np.all(null == null.flat[0]):
        warnings.warn(
            "all permuted statistics are identical; reporting p = 1",
            stacklevel=3,
        )
        return 1.0, True
    if mode == "enumeration":
        return beats / null.size, False
    return (1 + beats) / (1 + null.size), False


def run_permutation_test(
    statistic: Callable[[np.ndarray], float],
    cohort: Cohort,
    scheme: PermutationScheme,
    tail: str = "lower",
    batch_statistic: Callable[[np.ndarray], np.ndarray] | None = None,
    labels_matrix: np.ndarray | None = None,
    keep_null: bool = False,
) -> TestResult:
    """Assess a statistic against group-size-preserving relabelings.

    ``statistic`` maps a label vector to a scalar. ``batch_statistic``,
    when given, maps a (B, N) label matrix to B values and is used for the
    null sample (it must agree with ``statistic``). A precomputed
    ``labels_matrix`` (treated as Monte Carlo draws) can be shared between
    several tests to synchronize their permutation sets; evaluation order
    over draws never affects the result.
    """
    observed = float(statistic(cohort.labels))
    if labels_matrix is not None:
        matrix, mode = np.asarray(labels_matrix), "montecarlo"
    else:
        matrix, mode = draw_labelings(scheme, cohort.labels)
    null = _evaluate_null(statistic, batch_statistic, matrix)
    p, degenerate = permutation_p_value(observed, null, tail, mode)
    return TestResult(
        observed=observed,
        p_value=p,
        tail=tail,
        n_permutations=int(matrix.shape[0]),
        mode=mode,
        degenerate=degenerate,
        null=null if keep_null else None,
    )


def _evaluate_null(statistic, batch_statistic, matrix: np.ndarray) -> np.ndarray:
    if batch_statistic is not None:
        chunks = [
            batch_statistic(matrix[i : i + _BATCH_CHUNK])
            for i in range(0, matrix.shape[0], _BATCH_CHUNK)
        ]
        return np.concatenate(chunks)
    return np.array([float(statistic(row)) for row in matrix])


# ---------------------------------------------------------------------------
# Dispersion (MRPP) statistic
# ---------------------------------------------------------------------------


def mrpp_group_dispersion(s: np.ndarray, indices: Sequence[int]) -> float:
    """Average pairwise dissimilarity within one group.

    Equals the classical coefficient 2(n-2)!/n! applied to the sum over
    the n(n-1)/2 unordered pairs, i.e. the plain mean over pairs.
    """
    idx = np.asarray(indices)
    n = idx.size
    if n < 2:
        raise GroupTooSmall(f"dispersion needs at least 2 members, got {n}")
    sub = s[np.ix_(idx, idx)]
    return float(sub.sum() / (n * (n - 1)))


def group_weights(sizes: Sequence[int], weights="proportional") -> np.ndarray:
    """Resolve and validate group weights (positive, summing to one).

    'proportional' gives C_i = n_i / N; 'equal' gives C_i = 1/g; a
    sequence is validated as-is.
    """
    sizes = np.asarray(sizes, dtype=float)
    if isinstance(weights, str):
        if weights == "proportional":
            return sizes / sizes.sum()
        if weights == "equal":
            return np.full(len(sizes), 1.0 / len(sizes))
        raise BadWeights(f"unknown weight rule {weights!r}")
    w = np.asarray(weights, dtype=float)
    if w.shape != sizes.shape:
        raise BadWeights(f"expected {len(sizes)} weights, got {w.shape}")
    if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
        raise BadWeights(f"weights must be positive and sum to 1, got {w.tolist()}")
    return w


def mrpp_statistic(s: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    """Weighted sum of within-group dispersions for one labeling.

    ``weights`` must align with the sorted distinct labels.
    """
    labels = np.asarray(labels)
    ids = np.unique(labels)
    if len(ids) != len(weights):
        raise BadWeights(f"{len(weights)} weights for {len(ids)} groups")
    total = 0.0
    for g, w in zip(ids, weights):
        total += w * mrpp_group_dispersion(s, np.flatnonzero(labels == g))
    return total


def _mrpp_batch(
    s: np.ndarray, matrix: np.ndarray, ids: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    # (G @ S * G).sum(1) sums s over ordered within-group pairs; the zero
    # diagonal makes it exactly twice the unordered-pair sum.
    out = np.zeros(matrix.shape[0])
    for g, w in zip(ids, weights):
        member = (matrix == g).astype(float)
        n_g = member[0].sum()
        pair_sums = ((member @ s) * member).sum(axis=1)
        out += w * pair_sums / (n_g * (n_g - 1))
    return out


def mrpp_test(
    cohort: Cohort,
    measure: Measure,
    weights="proportional",
    scheme: PermutationScheme = MonteCarlo(),
    labels_matrix: np.ndarray | None = None,
    keep_null: bool = False,
) -> TestResult:
    """Dispersion-based permutation test for group difference.

    Builds the similarity matrix once (N(N-1)/2 measure evaluations), then
    re-scores cheap relabelings against it. Significant when the observed
    weighted dispersion falls in the lower tail of the permuted values.
    """
    sizes = cohort.group_sizes
    if np.any(sizes < 2):
        raise GroupTooSmall(f"every group needs >= 2 members, sizes {sizes.tolist()}")
    w = group_weights(sizes, weights)
    s = similarity_matrix(cohort.tensors, measure)
    ids = cohort.group_ids
    return run_permutation_test(
        statistic=lambda labels: mrpp_statistic(s, labels, w),
        cohort=cohort,
        scheme=scheme,
        tail="lower",
        batch_statistic=lambda matrix: _mrpp_batch(s, matrix, ids, w),
        labels_matrix=labels_matrix,
        keep_null=keep_null,
    )


# ---------------------------------------------------------------------------
# Mean-based statistic
# ---------------------------------------------------------------------------

# Each mean is only interpretable against the distance of its own geometry.
_MEAN_DISTANCE_PAIRS = {
    "arithmetic": "euclidean",
    "le": "logeuclidean",
    "sq": "sq",
}


def mean_based_statistic(cohort: Cohort, mean_kind: str, measure: Measure) -> float:
    """Distance between the two group means under a matched geometry."""
    return _mean_based_for_labels(cohort, cohort.labels, mean_kind, measure)


def _mean_based_for_labels(
    cohort: Cohort, labels: np.ndarray, mean_kind: str, measure: Measure
) -> float:
    ids = np.unique(np.asarray(labels))
    if len(ids) != 2:
        raise ValueError(f"mean-based statistic needs exactly 2 groups, got {len(ids)}")
    expected = _MEAN_DISTANCE_PAIRS.get(mean_kind)
    if expected is None:
        raise MeasurePairingError(
            f"no distance is paired with mean kind {mean_kind!r}"
        )
    if measure.kind != expected:
        raise MeasurePairingError(
            f"mean {mean_kind!r} must be paired with the {expected!r} measure, "
            f"got {measure.kind!r}"
        )
    groups = [
        [cohort.tensors[i] for i in np.flatnonzero(np.asarray(labels) == g)]
        for g in ids
    ]
    if mean_kind == "arithmetic":
        a, b = mean_arithmetic(groups[0]), mean_arithmetic(groups[1])
        return dist_euclidean(a, b)
    if mean_kind == "le":
        a, b = mean_log_euclidean(groups[0]), mean_log_euclidean(groups[1])
        return dist_log_euclidean(a, b)
    a, b = mean_spectral_quaternion(groups[0]), mean_spectral_quaternion(groups[1])
    return dist_spectral_quaternion(a, b, measure.k0)


def mean_based_test(
    cohort: Cohort,
    mean_kind: str,
    measure: Measure,
    scheme: PermutationScheme = FullEnumeration(),
    keep_null: bool = False,
) -> TestResult:
    """Permutation test on the between-means distance (upper tail).

    Every relabeling recomputes two group means, which is what makes this
    test factorially expensive compared to the dispersion route.
    """
    return run_permutation_test(
        statistic=lambda labels: _mean_based_for_labels(
            cohort, labels, mean_kind, measure
        ),
        cohort=cohort,
        scheme=scheme,
        tail="upper",
        keep_null=keep_null,
    )
