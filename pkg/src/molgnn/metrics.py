"""Evaluation metrics: tie-aware ROC-AUC and masked RMSE."""

from __future__ import annotations

import numpy as np


class MetricError(ValueError):
    pass


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability a positive outranks a negative; ties count one half.

    Computed with the rank-sum identity using average ranks for tied scores,
    which matches exhaustive pair counting exactly.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    pos = labels == 1.0
    n_pos = int(pos.sum())
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC-AUC needs both classes present")

    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average of 1-based ranks
        i = j + 1

    rank_sum = ranks[pos].sum()
    return (rank_sum - 0.5 * n_pos * (n_pos + 1)) / (n_pos * n_neg)


def roc_auc_mean(scores: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean per-task ROC-AUC over tasks with both classes under the mask."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores.reshape(-1, 1)
        labels = labels.reshape(-1, 1)
    if mask is None:
        mask = np.ones_like(labels)
    mask = np.asarray(mask, dtype=np.float64).reshape(labels.shape)

    valid = mask > 0
    bad = labels[valid]
    if bad.size and not np.all((bad == 0.0) | (bad == 1.0)):
        raise MetricError("classification labels must be 0 or 1 where masked in")

    per_task = []
    for t in range(labels.shape[1]):
        sel = valid[:, t]
        task_labels = labels[sel, t]
        if task_labels.size == 0 or task_labels.min() == task_labels.max():
            continue  # single-class tasks are excluded from the mean
        per_task.append(roc_auc(scores[sel, t], task_labels))
    if not per_task:
        raise MetricError("every task is single-class under the mask")
    return float(np.mean(per_task))


def rmse(pred: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Root mean squared error over masked-in entries."""
    pred = np.asarray(pred, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64).reshape(pred.shape)
    if mask is None:
        mask = np.ones_like(labels)
    mask = np.asarray(mask, dtype=np.float64).reshape(pred.shape)
    total = mask.sum()
    if total <= 0:
        raise MetricError("RMSE needs at least one masked-in entry")
    diff = (pred - labels) * mask
    return float(np.sqrt((diff * diff).sum() / total))
