import itertools
import json

import numpy as np
import pytest

from docscan.errors import InsufficientRuns
from docscan.evaluate import (
    aggregate_runs,
    clustering_accuracy,
    hungarian,
    make_report,
    random_baseline,
    save_report,
)


def brute_force_min(cost: np.ndarray):
    n = cost.shape[0]
    best, best_perm = np.inf, None
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i, perm[i]] for i in range(n))
        if total < best:
            best, best_perm = total, perm
    return best, best_perm


def hungarian_cost(cost: np.ndarray) -> float:
    perm = hungarian(cost)
    assert sorted(perm) == list(range(cost.shape[0]))
    return float(cost[np.arange(cost.shape[0]), perm].sum())


def test_hungarian_identity():
    cost = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(hungarian(cost), [0, 1])


def test_hungarian_swap():
    cost = np.array([[5.0, 1.0], [1.0, 5.0]])
    np.testing.assert_array_equal(hungarian(cost), [1, 0])


def test_hungarian_known_3x3():
    cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    assert hungarian_cost(cost) == pytest.approx(5.0)


def test_hungarian_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        cost = rng.normal(size=(n, n)) * 10
        expected, _ = brute_force_min(cost)
        assert hungarian_cost(cost) == pytest.approx(expected, abs=1e-9)


def test_hungarian_integer_and_degenerate_costs():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        cost = rng.integers(0, 3, size=(n, n)).astype(np.float64)
        expected, _ = brute_force_min(cost)
        assert hungarian_cost(cost) == pytest.approx(expected, abs=1e-9)


def test_hungarian_validation():
    with pytest.raises(ValueError):
        hungarian(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        hungarian(np.zeros(3))
    with pytest.raises(ValueError):
        hungarian(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_clustering_accuracy_perfect_relabeling():
    gold = np.array([0, 0, 1, 1, 2, 2])
    pred = np.array([2, 2, 0, 0, 1, 1])
    accuracy, mapping = clustering_accuracy(pred, gold)
    assert accuracy == 1.0
    np.testing.assert_array_equal(mapping, [1, 2, 0])


def test_clustering_accuracy_partial():
    gold = np.array([0, 0, 0, 1, 1, 1])
    pred = np.array([1, 1, 0, 0, 0, 0])
    # contingency [[1, 3], [2, 0]]; best map sends 0->1 and 1->0 for (3+2)/6
    accuracy, mapping = clustering_accuracy(pred, gold)
    assert accuracy == pytest.approx(5 / 6)
    np.testing.assert_array_equal(mapping, [1, 0])


def test_clustering_accuracy_handles_missing_ids():
    # prediction uses only cluster 0 of 3 classes
    gold = np.array([0, 1, 2])
    pred = np.array([0, 0, 0])
    accuracy, mapping = clustering_accuracy(pred, gold)
    assert accuracy == pytest.approx(1 / 3)
    assert sorted(mapping) == [0, 1, 2]


def test_clustering_accuracy_validation():
    with pytest.raises(ValueError):
        clustering_accuracy(np.array([0, 1]), np.array([0]))
    with pytest.raises(ValueError):
        clustering_accuracy(np.array([-1, 0]), np.array([0, 1]))


def test_clustering_accuracy_is_label_permutation_invariant():
    rng = np.random.default_rng(2)
    gold = rng.integers(0, 4, size=200)
    pred = rng.integers(0, 4, size=200)
    base, _ = clustering_accuracy(pred, gold)
    for perm in ([1, 2, 3, 0], [3, 2, 1, 0]):
        relabeled = np.array(perm)[pred]
        accuracy, _ = clustering_accuracy(relabeled, gold)
        assert accuracy == pytest.approx(base)


def test_aggregate_runs_closed_form():
    mean, halfwidth = aggregate_runs([0.8, 0.9])
    assert mean == pytest.approx(0.85)
    # sample std of [0.8, 0.9] is 0.1/sqrt(2); halfwidth = 1.96 * std / sqrt(2)
    assert halfwidth == pytest.approx(1.96 * 0.0707106781 / np.sqrt(2), rel=1e-6)


def test_aggregate_runs_equal_values_zero_width():
    mean, halfwidth = aggregate_runs([0.7] * 5)
    assert mean == pytest.approx(0.7)
    assert halfwidth == pytest.approx(0.0, abs=1e-12)


def test_aggregate_runs_requires_two():
    with pytest.raises(InsufficientRuns):
        aggregate_runs([0.9])


def test_make_report_single_run_no_halfwidth():
    report = make_report([0.75], [[0, 1]])
    assert report.mean == 0.75
    assert report.ci95_halfwidth is None
    assert report.per_seed_accuracies == [0.75]
    assert report.mapping == [[0, 1]]


def test_make_report_multi_run():
    report = make_report([0.8, 0.9], [[0, 1], [1, 0]])
    assert report.mean == pytest.approx(0.85)
    assert report.ci95_halfwidth == pytest.approx(aggregate_runs([0.8, 0.9])[1])


def test_random_baseline_near_chance():
    gold = np.repeat(np.arange(4), 1000)
    report = random_baseline(gold, seed=0, runs=10)
    assert len(report.per_seed_accuracies) == 10
    # optimal matching biases slightly above 1/C; stays well under 2/C
    assert 0.25 <= report.mean < 0.30
    assert report.ci95_halfwidth is not None


def test_random_baseline_deterministic():
    gold = np.repeat(np.arange(3), 50)
    a = random_baseline(gold, seed=5, runs=4)
    b = random_baseline(gold, seed=5, runs=4)
    assert a.per_seed_accuracies == b.per_seed_accuracies


def test_random_baseline_requires_two_runs():
    with pytest.raises(ValueError):
        random_baseline(np.array([0, 1]), seed=0, runs=1)


def test_save_report_merges_extras(tmp_path):
    report = make_report([0.8, 0.9], [[0, 1], [1, 0]])
    path = tmp_path / "report.json"
    save_report(report, path, experiment="docscan", dataset="blobs")
    payload = json.loads(path.read_text())
    assert payload["experiment"] == "docscan"
    assert payload["dataset"] == "blobs"
    assert payload["mean"] == pytest.approx(0.85)
    assert payload["per_seed_accuracies"] == [0.8, 0.9]
    assert payload["mapping"] == [[0, 1], [1, 0]]
