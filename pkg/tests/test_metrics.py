"""Assignment, error distributions, and classification scores."""

import itertools
import math

import numpy as np
import pytest

from spincam.errors import CardinalityMismatch
from spincam.metrics import (
    AssignmentResult,
    ConfusionCounts,
    ErrorDistribution,
    classification_metrics,
    hungarian,
    position_errors,
    success,
)


def brute_force_assignment(cost: np.ndarray) -> float:
    """Exhaustive minimum over all row/column pairings."""
    n, m = cost.shape
    k = min(n, m)
    best = math.inf
    rows = range(n)
    for row_subset in itertools.permutations(rows, k):
        for col_subset in itertools.permutations(range(m), k):
            total = sum(cost[r, c] for r, c in zip(row_subset, col_subset))
            best = min(best, total)
    return best


class TestSuccess:
    def test_both_empty(self):
        assert success([], []) is True

    def test_count_mismatch(self):
        assert success([1, 2], [1, 2, 3]) is False

    def test_count_only_ignores_positions(self):
        preds = [np.array([9.0, 9.0, 9.0])] * 4
        gts = [np.zeros(3)] * 4
        assert success(preds, gts) is True


class TestHungarian:
    def test_single_entry(self):
        result = hungarian([[5.0]])
        assert result.pairs == ((0, 0),)
        assert result.total_cost == 5.0
        assert result.unmatched_predictions == 0

    def test_two_by_two_prefers_cross_assignment(self):
        # brute force over both permutations: 1+4=5 vs 2+2=4
        result = hungarian([[1.0, 2.0], [2.0, 4.0]])
        assert result.pairs == ((0, 1), (1, 0))
        assert result.total_cost == 4.0

    def test_empty_matrix(self):
        result = hungarian(np.zeros((0, 0)))
        assert result == AssignmentResult((), 0.0, 0, 0)

    def test_rectangular_counts_unmatched(self):
        result = hungarian([[1.0, 5.0, 2.0]])
        assert len(result.pairs) == 1
        assert result.unmatched_ground_truth == 2
        assert result.unmatched_predictions == 0

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(1, 5))
            cost = rng.uniform(0.0, 10.0, (n, m))
            assert hungarian(cost).total_cost == pytest.approx(
                brute_force_assignment(cost), abs=1e-9
            )

    def test_rejects_non_finite_costs(self):
        with pytest.raises(ValueError):
            hungarian([[np.inf, 1.0], [1.0, 2.0]])


class TestPositionErrors:
    def test_identical_lists_give_zeros(self):
        points = [np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.0, 0.5])]
        assert position_errors(points, points) == [0.0, 0.0]

    def test_single_pair_distance(self):
        assert position_errors([(0, 0, 1)], [(0, 0, 2)]) == [1.0]

    def test_crossed_pairs_beat_greedy_matching(self):
        # greedy grabs the 0.1 match and pays 2.1; optimal pays 1.0 + 1.0
        preds = [(1.0, 0.0, 0.0), (2.1, 0.0, 0.0)]
        gts = [(0.0, 0.0, 0.0), (1.1, 0.0, 0.0)]
        errors = position_errors(preds, gts)
        assert errors == pytest.approx([1.0, 1.0])
        assert sum(errors) < 0.1 + 2.1

    def test_cardinality_mismatch(self):
        with pytest.raises(CardinalityMismatch):
            position_errors([(0, 0, 1)], [])

    def test_invariant_under_consistent_permutation(self):
        rng = np.random.default_rng(1)
        preds = [rng.uniform(-1, 1, 3) for _ in range(5)]
        gts = [rng.uniform(-1, 1, 3) for _ in range(5)]
        baseline = sorted(position_errors(preds, gts))
        order = rng.permutation(5)
        shuffled = sorted(position_errors([preds[i] for i in order], [gts[i] for i in order]))
        assert baseline == pytest.approx(shuffled, abs=1e-12)

    def test_empty_lists(self):
        assert position_errors([], []) == []


class TestClassificationMetrics:
    def test_balanced_example(self):
        p, r, f1 = classification_metrics(ConfusionCounts(tp=2, fp=1, fn=1))
        assert (p, r, f1) == pytest.approx((2 / 3, 2 / 3, 2 / 3))

    def test_no_positive_predictions_gives_nan_precision(self):
        p, r, f1 = classification_metrics(ConfusionCounts(tp=0, fp=0, fn=5))
        assert math.isnan(p)
        assert r == 0.0
        assert f1 == 0.0

    def test_perfect_classifier(self):
        p, r, f1 = classification_metrics(ConfusionCounts(tp=7, fp=0, fn=0, tn=3))
        assert (p, r, f1) == (1.0, 1.0, 1.0)

    def test_f1_between_precision_and_recall(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            counts = ConfusionCounts(
                tp=int(rng.integers(1, 20)), fp=int(rng.integers(0, 20)),
                fn=int(rng.integers(0, 20)), tn=int(rng.integers(0, 20)),
            )
            p, r, f1 = classification_metrics(counts)
            assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12

    def test_from_pairs_counting(self):
        pairs = [(True, True), (True, False), (False, True), (False, False), (True, True)]
        counts = ConfusionCounts.from_pairs(pairs)
        assert (counts.tp, counts.fn, counts.fp, counts.tn) == (2, 1, 1, 1)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(tp=-1)


class TestErrorDistribution:
    def test_quartiles_ordered(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            dist = ErrorDistribution.from_samples(rng.lognormal(0.0, 1.0, 40))
            assert dist.whisker_low <= dist.q1 <= dist.median <= dist.q3 <= dist.whisker_high

    def test_known_small_sample(self):
        dist = ErrorDistribution.from_samples([1.0, 2.0, 3.0, 4.0])
        assert dist.median == 2.5
        assert dist.q1 == 1.75 and dist.q3 == 3.25  # linear interpolation method
        assert dist.mean == 2.5
        assert dist.outliers == ()
        assert dist.whisker_low == 1.0 and dist.whisker_high == 4.0

    def test_outlier_detection(self):
        dist = ErrorDistribution.from_samples([1.0, 1.1, 0.9, 1.05, 0.95, 10.0])
        assert 10.0 in dist.outliers
        assert dist.whisker_high < 10.0

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            ErrorDistribution.from_samples([])
