"""Dispersion statistic, permutation engine, and the mean-based test."""

import math

import numpy as np
import pytest

from spdperm import (
    BadWeights,
    Cohort,
    DeformationSpec,
    EnumerationTooLarge,
    FullEnumeration,
    GroupTooSmall,
    Measure,
    MeasurePairingError,
    MonteCarlo,
    SpdTensor,
    WishartNoise,
    dist_log_euclidean,
    draw_labelings,
    enumerate_labelings,
    group_weights,
    make_cohort,
    mean_based_statistic,
    mean_based_test,
    mean_log_euclidean,
    mrpp_group_dispersion,
    mrpp_statistic,
    mrpp_test,
    n_assignments,
    run_permutation_test,
    similarity_matrix,
)

from helpers import brute_force_mrpp_p, random_tensors


class TestCohort:
    def test_from_groups(self):
        rng = np.random.default_rng(139)
        a, b = random_tensors(rng, 3), random_tensors(rng, 2)
        cohort = Cohort.from_groups([a, b])
        assert cohort.n == 5
        assert cohort.group_sizes.tolist() == [3, 2]
        assert [idx.tolist() for idx in cohort.group_indices()] == [[0, 1, 2], [3, 4]]

    def test_label_shape_mismatch(self):
        rng = np.random.default_rng(149)
        with pytest.raises(ValueError):
            Cohort(tuple(random_tensors(rng, 3)), np.array([0, 1]))

    def test_arbitrary_label_values(self):
        rng = np.random.default_rng(151)
        cohort = Cohort(tuple(random_tensors(rng, 4)), np.array([7, 2, 7, 2]))
        assert cohort.group_ids.tolist() == [2, 7]
        assert cohort.group_sizes.tolist() == [2, 2]


class TestDispersionCoefficient:
    def test_classical_coefficient_identity(self):
        # 2 (n-2)! / n! == 2 / (n (n-1)) == 1 / C(n, 2)
        for n in range(2, 21):
            classical = 2 * math.factorial(n - 2) / math.factorial(n)
            assert math.isclose(classical, 2 / (n * (n - 1)), rel_tol=1e-15)
            assert math.isclose(classical, 1 / math.comb(n, 2), rel_tol=1e-15)


class TestGroupDispersion:
    def test_pair_group_is_its_single_similarity(self):
        s = np.array([[0.0, 0.7], [0.7, 0.0]])
        assert mrpp_group_dispersion(s, [0, 1]) == 0.7

    def test_identical_points_zero(self):
        s = np.zeros((4, 4))
        assert mrpp_group_dispersion(s, [0, 1, 2, 3]) == 0.0

    def test_matches_pair_loop_oracle(self):
        rng = np.random.default_rng(157)
        tensors = random_tensors(rng, 5)
        measure = Measure("logeuclidean")
        s = similarity_matrix(tensors, measure)
        total = 0.0
        for i in range(5):
            for j in range(i + 1, 5):
                total += measure.pair(tensors[i], tensors[j])
        assert math.isclose(
            mrpp_group_dispersion(s, range(5)), total / 10, rel_tol=1e-12
        )

    def test_too_small(self):
        with pytest.raises(GroupTooSmall):
            mrpp_group_dispersion(np.zeros((3, 3)), [0])


class TestWeightsAndStatistic:
    def test_proportional(self):
        assert group_weights([3, 7]).tolist() == [0.3, 0.7]

    def test_equal(self):
        assert group_weights([3, 7], "equal").tolist() == [0.5, 0.5]

    def test_explicit_validated(self):
        assert group_weights([2, 2], [0.25, 0.75]).tolist() == [0.25, 0.75]
        with pytest.raises(BadWeights):
            group_weights([2, 2], [0.5, 0.6])
        with pytest.raises(BadWeights):
            group_weights([2, 2], [-0.5, 1.5])
        with pytest.raises(BadWeights):
            group_weights([2, 2], "inverse")

    def test_equal_dispersions_give_that_value(self):
        s = np.ones((4, 4)) - np.eye(4)
        labels = np.array([0, 0, 1, 1])
        for w in ([0.5, 0.5], [0.2, 0.8]):
            assert math.isclose(
                mrpp_statistic(s, labels, np.array(w)), 1.0, rel_tol=1e-12
            )

    def test_half_half_mix(self):
        # group 0 dispersion 0, group 1 dispersion 1
        s = np.zeros((4, 4))
        s[2, 3] = s[3, 2] = 1.0
        labels = np.array([0, 0, 1, 1])
        assert mrpp_statistic(s, labels, np.array([0.5, 0.5])) == 0.5

    def test_three_groups_match_direct_sum(self):
        rng = np.random.default_rng(163)
        tensors = random_tensors(rng, 9)
        labels = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
        s = similarity_matrix(tensors, Measure("euclidean"))
        w = group_weights([3, 3, 3])
        expected = sum(
            w[k] * mrpp_group_dispersion(s, np.flatnonzero(labels == k))
            for k in range(3)
        )
        assert math.isclose(mrpp_statistic(s, labels, w), expected, rel_tol=1e-12)


class TestEnumeration:
    def test_assignment_counts(self):
        assert n_assignments([3, 3]) == 20
        assert n_assignments([4, 4]) == 70
        assert n_assignments([10, 10]) == 184756
        assert n_assignments([2, 2, 2]) == 90

    def test_enumerate_small(self):
        labels = np.array([0, 0, 1])
        matrix = enumerate_labelings(labels)
        assert matrix.shape == (3, 3)
        rows = {tuple(r) for r in matrix.tolist()}
        assert rows == {(0, 0, 1), (0, 1, 0), (1, 0, 0)}

    def test_enumeration_preserves_sizes(self):
        labels = np.array([0, 0, 0, 1, 1])
        matrix = enumerate_labelings(labels)
        assert matrix.shape == (10, 5)
        assert all(int(np.sum(row == 0)) == 3 for row in matrix)

    def test_cap(self):
        labels = np.array([0] * 10 + [1] * 10)
        with pytest.raises(EnumerationTooLarge):
            draw_labelings(FullEnumeration(cap=1000), labels)


class TestPermutationEngine:
    def test_exact_p_matches_brute_force_three_vs_three(self):
        rng = np.random.default_rng(167)
        tensors = random_tensors(rng, 6)
        labels = np.array([0, 0, 0, 1, 1, 1])
        cohort = Cohort(tuple(tensors), labels)
        measure = Measure("logeuclidean")
        result = mrpp_test(cohort, measure, scheme=FullEnumeration())
        observed, p_exact, values = brute_force_mrpp_p(tensors, labels, measure)
        assert math.isclose(result.observed, observed, rel_tol=1e-12)
        assert result.p_value == p_exact
        assert result.n_permutations == 20

    def test_exact_p_two_vs_two(self):
        rng = np.random.default_rng(173)
        tensors = random_tensors(rng, 4)
        labels = np.array([0, 0, 1, 1])
        cohort = Cohort(tuple(tensors), labels)
        measure = Measure("euclidean")
        result = mrpp_test(cohort, measure, scheme=FullEnumeration())
        _, p_exact, _ = brute_force_mrpp_p(tensors, labels, measure)
        assert result.p_value == p_exact
        assert result.n_permutations == 6

    def test_monte_carlo_close_to_exact(self):
        rng = np.random.default_rng(179)
        tensors = random_tensors(rng, 6)
        labels = np.array([0, 0, 0, 1, 1, 1])
        cohort = Cohort(tuple(tensors), labels)
        measure = Measure("logeuclidean")
        _, p_exact, _ = brute_force_mrpp_p(tensors, labels, measure)
        n_p = 20000
        result = mrpp_test(cohort, measure, scheme=MonteCarlo(n_p, seed=5))
        bound = 3 * math.sqrt(p_exact * (1 - p_exact) / n_p)
        assert abs(result.p_value - p_exact) <= bound + 1 / (1 + n_p)

    def test_batch_agrees_with_scalar_statistic(self):
        rng = np.random.default_rng(181)
        tensors = random_tensors(rng, 8)
        labels = np.array([0] * 4 + [1] * 4)
        cohort = Cohort(tuple(tensors), labels)
        s = similarity_matrix(tensors, Measure("sq"))
        w = group_weights([4, 4])
        matrix, _ = draw_labelings(MonteCarlo(200, seed=3), labels)
        from spdperm.permtest import _mrpp_batch

        batch = _mrpp_batch(s, matrix, np.array([0, 1]), w)
        scalar = np.array([mrpp_statistic(s, row, w) for row in matrix])
        assert np.allclose(batch, scalar, rtol=1e-12, atol=1e-15)

    def test_identical_tensors_give_p_one_with_warning(self):
        t = SpdTensor(2, 1, 1, 0.1, 0, 0)
        cohort = Cohort((t,) * 8, np.array([0] * 4 + [1] * 4))
        with pytest.warns(UserWarning, match="identical"):
            result = mrpp_test(cohort, Measure("euclidean"), scheme=MonteCarlo(100, seed=1))
        assert result.p_value == 1.0
        assert result.degenerate

    def test_fixed_seed_reproducible(self):
        cohort = make_cohort(
            "low", DeformationSpec("co", 0.4), noise=WishartNoise(df=10, seed=9)
        )
        a = mrpp_test(cohort, Measure("sq"), scheme=MonteCarlo(500, seed=11), keep_null=True)
        b = mrpp_test(cohort, Measure("sq"), scheme=MonteCarlo(500, seed=11), keep_null=True)
        assert a.observed == b.observed
        assert a.p_value == b.p_value
        assert np.array_equal(a.null, b.null)

    def test_group_relabeling_leaves_p_unchanged(self):
        rng = np.random.default_rng(191)
        tensors = random_tensors(rng, 10)
        labels = np.array([0] * 5 + [1] * 5)
        swapped = 1 - labels
        a = mrpp_test(Cohort(tuple(tensors), labels), Measure("logeuclidean"),
                      scheme=MonteCarlo(1000, seed=13))
        b = mrpp_test(Cohort(tuple(tensors), swapped), Measure("logeuclidean"),
                      scheme=MonteCarlo(1000, seed=13))
        assert a.p_value == b.p_value

    def test_similarity_matrix_computed_once(self):
        cohort = make_cohort(
            "low", DeformationSpec("im", 0.5), noise=WishartNoise(df=10, seed=4)
        )
        calls = 0
        base = Measure("logeuclidean")

        class Counting:
            def pair(self, a, b):
                nonlocal calls
                calls += 1
                return base.pair(a, b)

        mrpp_test(cohort, Counting(), scheme=MonteCarlo(5000, seed=2))
        assert calls == cohort.n * (cohort.n - 1) // 2

    def test_well_separated_groups_hit_the_floor(self):
        # strong IM deformation at low noise: observed dispersion beats
        # every sampled relabeling
        n_p = 2000
        cohort = make_cohort(
            "low", DeformationSpec("im", 1.0), noise=WishartNoise(df=500, seed=21)
        )
        result = mrpp_test(
            cohort, Measure("logeuclidean"), scheme=MonteCarlo(n_p, seed=7),
            keep_null=True,
        )
        assert result.p_value == 1 / (1 + n_p)
        assert result.null.min() > result.observed

    def test_null_p_values_superuniform(self):
        # under the null, P(p <= alpha) <= alpha + 1/(1+Np) up to MC noise
        alpha, n_p, k = 0.2, 200, 150
        hits = 0
        for i in range(k):
            cohort = make_cohort(
                "low", DeformationSpec("co", 0.0), n_per_group=5,
                noise=WishartNoise(df=10, seed=1000 + i),
            )
            r = mrpp_test(cohort, Measure("euclidean"), scheme=MonteCarlo(n_p, seed=i))
            hits += r.p_value <= alpha
        rate = hits / k
        slack = 3 * math.sqrt(alpha * (1 - alpha) / k)
        assert rate <= alpha + 1 / (1 + n_p) + slack

    def test_mrpp_needs_pairs(self):
        rng = np.random.default_rng(193)
        cohort = Cohort(tuple(random_tensors(rng, 3)), np.array([0, 1, 1]))
        with pytest.raises(GroupTooSmall):
            mrpp_test(cohort, Measure("fa"))

    def test_upper_tail(self):
        rng = np.random.default_rng(197)
        tensors = random_tensors(rng, 6)
        cohort = Cohort(tuple(tensors), np.array([0, 0, 0, 1, 1, 1]))
        s = similarity_matrix(tensors, Measure("euclidean"))
        w = group_weights([3, 3])
        lower = run_permutation_test(
            lambda labels: mrpp_statistic(s, labels, w), cohort,
            FullEnumeration(), tail="lower",
        )
        upper = run_permutation_test(
            lambda labels: mrpp_statistic(s, labels, w), cohort,
            FullEnumeration(), tail="upper",
        )
        # every assignment is counted in exactly one strict tail; ties in
        # both, and the observed labeling ties with itself
        assert lower.p_value + upper.p_value >= 1.0


class TestMeanBased:
    def test_identical_groups_zero(self):
        rng = np.random.default_rng(199)
        tensors = random_tensors(rng, 3)
        cohort = Cohort(tuple(tensors * 2), np.array([0, 0, 0, 1, 1, 1]))
        assert mean_based_statistic(cohort, "le", Measure("logeuclidean")) < 1e-12

    def test_identity_vs_scaled_identity(self):
        ident = SpdTensor(1, 1, 1, 0, 0, 0)
        scaled = SpdTensor(math.e, math.e, math.e, 0, 0, 0)
        cohort = Cohort((ident,) * 3 + (scaled,) * 3, np.array([0, 0, 0, 1, 1, 1]))
        delta = mean_based_statistic(cohort, "le", Measure("logeuclidean"))
        assert math.isclose(delta, math.sqrt(3), rel_tol=1e-12)

    def test_matches_manual_composition(self):
        rng = np.random.default_rng(211)
        tensors = random_tensors(rng, 10)
        cohort = Cohort(tuple(tensors), np.array([0] * 5 + [1] * 5))
        manual = dist_log_euclidean(
            mean_log_euclidean(tensors[:5]), mean_log_euclidean(tensors[5:])
        )
        assert math.isclose(
            mean_based_statistic(cohort, "le", Measure("logeuclidean")),
            manual,
            rel_tol=1e-12,
        )

    def test_pairing_enforced(self):
        rng = np.random.default_rng(223)
        cohort = Cohort(tuple(random_tensors(rng, 4)), np.array([0, 0, 1, 1]))
        with pytest.raises(MeasurePairingError):
            mean_based_statistic(cohort, "le", Measure("euclidean"))
        with pytest.raises(MeasurePairingError):
            mean_based_statistic(cohort, "arithmetic", Measure("sq"))
        with pytest.raises(MeasurePairingError):
            mean_based_statistic(cohort, "karcher", Measure("logeuclidean"))

    def test_two_groups_required(self):
        rng = np.random.default_rng(227)
        cohort = Cohort(tuple(random_tensors(rng, 6)), np.array([0, 0, 1, 1, 2, 2]))
        with pytest.raises(ValueError):
            mean_based_statistic(cohort, "le", Measure("logeuclidean"))

    def test_separated_groups_significant_upper_tail(self):
        cohort = make_cohort(
            "low", DeformationSpec("im", 1.0), n_per_group=4,
            noise=WishartNoise(df=200, seed=3),
        )
        result = mean_based_test(cohort, "le", Measure("logeuclidean"))
        assert result.tail == "upper"
        assert result.mode == "enumeration"
        # C(8,4) = 70 assignments; the observed labeling and its mirror tie
        # at the top (the statistic is symmetric in the two groups)
        assert result.p_value == 2 / 70
