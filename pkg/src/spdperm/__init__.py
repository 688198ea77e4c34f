"""Nonparametric group comparison for populations of 3x3 SPD tensors.

Dispersion-based (MRPP) and mean-based permutation tests under Euclidean,
log-Euclidean and spectral-quaternion geometries, multivariate partial
tests with p-value combination, Wishart synthetic cohorts and a power
study harness.
"""

from .errors import (
    BadWeights,
    DegenerateMean,
    EmptyInput,
    EnumerationTooLarge,
    GroupTooSmall,
    MeasurePairingError,
    NoConvergence,
    NonFinite,
    NonPositiveValue,
    NotARotation,
    NotPositiveDefinite,
    SpdPermError,
)
from .harness import (
    BenchmarkRow,
    PowerCurve,
    PowerPoint,
    StudyConfig,
    StudyInterrupted,
    benchmark_costs,
    evaluation_exponent,
    run_power_study,
)
from .means import (
    chordal_mean_quaternions,
    karcher_gradient_norm,
    mean_arithmetic,
    mean_by_kind,
    mean_karcher,
    mean_log_euclidean,
    mean_spectral_quaternion,
)
from .multivariate import (
    PartialTestReport,
    column_similarity_matrix,
    combine_column_tests,
    multivariate_test,
    parametrize,
    partial_variable_similarity,
    variable_names,
)
from .permtest import (
    Cohort,
    FullEnumeration,
    MonteCarlo,
    TestResult,
    draw_labelings,
    enumerate_labelings,
    group_weights,
    mean_based_statistic,
    mean_based_test,
    mrpp_group_dispersion,
    mrpp_statistic,
    mrpp_test,
    n_assignments,
    run_permutation_test,
)
from .similarity import (
    Measure,
    chordal_quaternion_distance,
    dist_euclidean,
    dist_log_euclidean,
    dist_spectral_quaternion,
    eigenvalue_log_similarity,
    fa_similarity,
    orientation_weight,
    similarity_matrix,
)
from .spd import (
    SpdTensor,
    SpectralDecomposition,
    UnitQuaternion,
    exp_sym,
    fractional_anisotropy,
    log_spd,
    quaternion_to_rotation,
    rotation_about,
    rotation_to_quaternion,
    spectral_decompose,
    validate_spd,
)
from .synth import (
    DeformationSpec,
    WishartNoise,
    deform,
    make_cohort,
    reference_tensor,
    wishart_sample,
)

__version__ = "0.1.0"
