"""ROC-AUC against a brute-force pairwise oracle; RMSE; mask inertness."""

import numpy as np
import pytest

from molgnn.metrics import MetricError, rmse, roc_auc, roc_auc_mean


def pairwise_auc(scores, labels) -> float:
    """Exhaustive oracle: fraction of (positive, negative) pairs ranked
    correctly, ties counted one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def test_spec_example():
    scores = np.array([0.1, 0.4, 0.35, 0.8])
    labels = np.array([0.0, 0.0, 1.0, 1.0])
    assert roc_auc(scores, labels) == 0.75


def test_perfect_separation():
    assert roc_auc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1.0])) == 1.0


def test_all_ties_is_half():
    assert roc_auc(np.ones(6), np.array([0, 1, 0, 1, 0, 1.0])) == 0.5


def test_matches_bruteforce_on_random_instances():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        labels = rng.integers(0, 2, size=n).astype(float)
        if labels.min() == labels.max():
            labels[0] = 1.0 - labels[0]
        # quantized scores inject plenty of ties
        scores = np.round(rng.random(n) * 4) / 4
        assert roc_auc(scores, labels) == pairwise_auc(scores, labels)


def test_mean_skips_single_class_tasks():
    scores = np.array([[0.9, 0.1], [0.2, 0.4], [0.7, 0.3]])
    labels = np.array([[1.0, 1.0], [0.0, 1.0], [1.0, 1.0]])
    # task 1 is all-positive and must be excluded
    expected = roc_auc(scores[:, 0], labels[:, 0])
    assert roc_auc_mean(scores, labels) == expected


def test_mean_errors_when_every_task_single_class():
    scores = np.array([[0.9], [0.2]])
    labels = np.array([[1.0], [1.0]])
    with pytest.raises(MetricError):
        roc_auc_mean(scores, labels)


def test_mask_controls_task_entry():
    scores = np.array([[0.9], [0.8], [0.2], [0.1]])
    labels = np.array([[1.0], [123.0], [0.0], [0.0]])
    mask = np.array([[1.0], [0.0], [1.0], [1.0]])
    assert roc_auc_mean(scores, labels, mask) == 1.0


def test_masked_labels_validated():
    scores = np.array([[0.9], [0.2]])
    labels = np.array([[1.0], [0.5]])
    with pytest.raises(MetricError):
        roc_auc_mean(scores, labels)


def test_mean_over_multiple_tasks():
    rng = np.random.default_rng(7)
    scores = rng.random((40, 3))
    labels = rng.integers(0, 2, size=(40, 3)).astype(float)
    per_task = [pairwise_auc(scores[:, t], labels[:, t]) for t in range(3)]
    assert roc_auc_mean(scores, labels) == pytest.approx(np.mean(per_task), abs=1e-12)


class TestRmse:
    def test_zero_when_equal(self):
        pred = np.array([[1.0, 2.0]])
        assert rmse(pred, pred) == 0.0

    def test_hand_value(self):
        assert rmse(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == pytest.approx(
            np.sqrt(12.5)
        )

    def test_mask_zeroes_error(self):
        pred = np.array([[1.0, 99.0]])
        labels = np.array([[1.0, 4.0]])
        mask = np.array([[1.0, 0.0]])
        assert rmse(pred, labels, mask) == 0.0

    def test_empty_mask_rejected(self):
        with pytest.raises(MetricError):
            rmse(np.array([[1.0]]), np.array([[1.0]]), np.array([[0.0]]))
