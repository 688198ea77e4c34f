"""Multivariate permutation testing via combined per-variable partial tests.

A cohort is mapped to six scalar variables per tensor, either geometric
(three descending eigenvalues plus the vector part of the cohort-aligned
eigenframe quaternion) or Euclidean (the six raw components). Each
variable gets its own univariate dispersion test over one shared,
synchronized set of label permutations; the marginal p-values are then
fused by a combining function whose null distribution comes from the same
permutation set, ranked within itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveValue
from .means import chordal_mean_quaternions
from .permtest import (
    Cohort,
    MonteCarlo,
    PermutationScheme,
    _mrpp_batch,
    draw_labelings,
    group_weights,
    mrpp_statistic,
)
from .similarity import eigenvalue_log_similarity

PARAMETRIZATIONS = ("geometric", "euclidean")
COMBINERS = ("fisher", "tippett")

# Variable labels and the per-column pair measure: "log" compares positive
# values by |log(a/b)|, "abs" by |a - b|.
_VARIABLES = {
    "geometric": (
        ("lambda1", "lambda2", "lambda3", "qx", "qy", "qz"),
        ("log", "log", "log", "abs", "abs", "abs"),
    ),
    "euclidean": (
        ("xx", "yy", "zz", "xy", "xz", "yz"),
        ("abs", "abs", "abs", "abs", "abs", "abs"),
    ),
}


def variable_names(parametrization: str) -> tuple[str, ...]:
    return _variables(parametrization)[0]


def variable_kinds(parametrization: str) -> tuple[str, ...]:
    return _variables(parametrization)[1]


def _variables(parametrization: str):
    try:
        return _VARIABLES[parametrization]
    except KeyError:
        raise ValueError(
            f"unknown parametrization {parametrization!r}; choose from {PARAMETRIZATIONS}"
        ) from None


def parametrize(cohort: Cohort, parametrization: str) -> np.ndarray:
    """Per-sample 6-vector table (N, 6) for the chosen parametrization.

    Geometric rows are (lambda1, lambda2, lambda3, qx, qy, qz) with every
    quaternion sign-aligned to the cohort chordal mean first; canonical
    signs alone can flip between nearly identical tensors and would
    manufacture spurious differences in the quaternion columns.
    """
    _variables(parametrization)
    if parametrization == "euclidean":
        return np.array([t.components() for t in cohort.tensors])
    quats = [t.spectral.quaternion for t in cohort.tensors]
    reference = chordal_mean_quaternions(quats).as_array()
    rows = []
    for t, q in zip(cohort.tensors, quats):
        qa = q.as_array()
        if float(qa @ reference) < 0.0:
            qa = -qa
        lam = t.spectral.eigenvalues
        rows.append([lam[0], lam[1], lam[2], qa[1], qa[2], qa[3]])
    return np.array(rows)


def partial_variable_similarity(parametrization: str, variable: int):
    """Scalar pair measure for one variable column.

    Eigenvalue columns use the geometric measure |log(a/b)| (errors on
    non-positive input); quaternion-component and Euclidean columns use
    the absolute difference.
    """
    kinds = variable_kinds(parametrization)
    if variable < 0 or variable >= len(kinds):
        raise IndexError(f"variable index {variable} out of range")
    if kinds[variable] == "log":
        return eigenvalue_log_similarity
    return lambda a, b: abs(a - b)


def column_similarity_matrix(values: np.ndarray, kind: str) -> np.ndarray:
    """Pairwise matrix for one variable column (vectorized).

    Matches the scalar measure from :func:`partial_variable_similarity`:
    |log a - log b| == |log(a/b)| for positive values.
    """
    v = np.asarray(values, dtype=float)
    if kind == "log":
        if np.any(v <= 0.0):
            raise NonPositiveValue("log-scale variable has non-positive entries")
        v = np.log(v)
    elif kind != "abs":
        raise ValueError(f"unknown column kind {kind!r}")
    return np.abs(v[:, None] - v[None, :])


@dataclass(frozen=True)
class PartialTestReport:
    """Per-variable statistics and p-values plus their combination."""

    parametrization: str
    combiner: str
    variable_names: tuple[str, ...]
    observed: np.ndarray
    marginal_p: np.ndarray
    combined_stat: float
    combined_p: float
    n_permutations: int
    mode: str
    degenerate_variables: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "parametrization": self.parametrization,
            "combiner": self.combiner,
            "variables": list(self.variable_names),
            "observed": [float(v) for v in self.observed],
            "marginal_p": [float(v) for v in self.marginal_p],
            "combined_stat": self.combined_stat,
            "combined_p": self.combined_p,
            "n_permutations": self.n_permutations,
            "mode": self.mode,
            "degenerate_variables": list(self.degenerate_variables),
        }


def fisher_combine(xi: np.ndarray) -> np.ndarray:
    """Fisher combining function -2 sum(log xi); larger means stronger."""
    return -2.0 * np.sum(np.log(xi), axis=-1)


def tippett_combine(xi: np.ndarray) -> np.ndarray:
    """Tippett combining function min(xi); smaller means stronger."""
    return np.min(xi, axis=-1)


# tail direction of the combined statistic per combiner
_COMBINER_TAILS = {"fisher": "upper", "tippett": "lower"}


def multivariate_test(
    cohort: Cohort,
    parametrization: str = "geometric",
    combiner: str = "fisher",
    scheme: PermutationScheme = MonteCarlo(),
    weights="proportional",
    labels_matrix: np.ndarray | None = None,
) -> PartialTestReport:
    """Combined test over the six variables of a parametrization.

    One permutation set is drawn once and reused for every variable, so
    the per-permutation marginal p-values are jointly valid and the
    combined statistic has a proper permutation null.
    """
    table = parametrize(cohort, parametrization)
    kinds = variable_kinds(parametrization)
    matrices = [
        column_similarity_matrix(table[:, j], kinds[j]) for j in range(table.shape[1])
    ]
    if labels_matrix is not None:
        matrix, mode = np.asarray(labels_matrix), "montecarlo"
    else:
        matrix, mode = draw_labelings(scheme, cohort.labels)
    report = combine_column_tests(
        matrices,
        cohort.labels,
        matrix,
        mode,
        combiner=combiner,
        weights=weights,
    )
    names = variable_names(parametrization)
    report["degenerate_variables"] = tuple(
        names[j] for j in report["degenerate_variables"]
    )
    return PartialTestReport(
        parametrization=parametrization,
        combiner=combiner,
        variable_names=names,
        **report,
    )


def combine_column_tests(
    matrices: list[np.ndarray],
    labels: np.ndarray,
    labels_matrix: np.ndarray,
    mode: str,
    combiner: str = "fisher",
    weights="proportional",
) -> dict:
    """Partial dispersion tests on given pair matrices, then combination.

    Returns the report fields shared by any stack of column tests:
    observed statistics, marginal p-values, combined statistic/p-value,
    permutation count, mode and degenerate column indices. Marginal and
    per-permutation pseudo p-values are ranks within the pooled value set
    (observed plus permuted for Monte Carlo; the enumeration already
    contains the observed labeling), using the same tie-conservative
    counting as the univariate engine.
    """
    if combiner not in _COMBINER_TAILS:
        raise ValueError(f"unknown combiner {combiner!r}; choose from {COMBINERS}")
    labels = np.asarray(labels)
    ids = np.unique(labels)
    sizes = [int(np.sum(labels == g)) for g in ids]
    if min(sizes) < 2:
        raise ValueError(f"every group needs >= 2 members, sizes {sizes}")
    w = group_weights(sizes, weights)

    n_vars = len(matrices)
    b = labels_matrix.shape[0]
    observed = np.array([mrpp_statistic(s, labels, w) for s in matrices])
    null = np.stack([_mrpp_batch(s, labels_matrix, ids, w) for s in matrices])

    denom = b if mode == "enumeration" else b + 1
    xi_observed = np.empty(n_vars)
    xi_null = np.empty((n_vars, b))
    degenerate: list[int] = []
    for j in range(n_vars):
        pool = null[j] if mode == "enumeration" else np.concatenate(
            ([observed[j]], null[j])
        )
        ordered = np.sort(pool)
        xi_observed[j] = np.searchsorted(ordered, observed[j], side="right") / denom
        xi_null[j] = np.searchsorted(ordered, null[j], side="right") / denom
        if np.all(pool == pool[0]):
            degenerate.append(j)
    if degenerate:
        warnings.warn(
            f"degenerate partial test(s) at column index {degenerate}; "
            "their marginal p-values are 1",
            stacklevel=2,
        )

    combine = fisher_combine if combiner == "fisher" else tippett_combine
    combined_stat = float(combine(xi_observed))
    combined_null = combine(xi_null.T)
    if _COMBINER_TAILS[combiner] == "upper":
        beats = int(np.sum(combined_null >= combined_stat))
    else:
        beats = int(np.sum(combined_null <= combined_stat))
    if mode == "enumeration":
        combined_p = beats / b
    else:
        combined_p = (1 + beats) / (1 + b)

    return {
        "observed": observed,
        "marginal_p": xi_observed,
        "combined_stat": combined_stat,
        "combined_p": combined_p,
        "n_permutations": int(b),
        "mode": mode,
        "degenerate_variables": tuple(degenerate),
    }
