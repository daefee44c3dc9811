"""Selection and prediction quality measures for benchmark scoring."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

__all__ = ["auc", "fdr", "false_omission_rate", "prediction_mse", "selection_metrics"]


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve of ``scores`` against binary ``labels``.

    Mann-Whitney form with ties counted half. Raises on degenerate labels
    (all positive or all negative), where the AUC is undefined.
    """
    scores = np.ravel(np.asarray(scores, dtype=np.float64))
    labels = np.ravel(np.asarray(labels)).astype(bool)
    if scores.shape != labels.shape:
        raise ValidationError("scores and labels must have the same length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("auc needs both positive and negative labels")
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def fdr(selected: np.ndarray, truth: np.ndarray) -> float:
    """False discovery rate of a boolean selection against boolean truth.

    Zero by convention when nothing is selected.
    """
    selected = np.ravel(np.asarray(selected)).astype(bool)
    truth = np.ravel(np.asarray(truth)).astype(bool)
    if selected.shape != truth.shape:
        raise ValidationError("selected and truth must have the same length")
    claimed = int(selected.sum())
    if claimed == 0:
        return 0.0
    return float(np.sum(selected & ~truth)) / claimed


def false_omission_rate(selected: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of claimed negatives that are actually positive.

    Zero by convention when everything is selected.
    """
    selected = np.ravel(np.asarray(selected)).astype(bool)
    truth = np.ravel(np.asarray(truth)).astype(bool)
    if selected.shape != truth.shape:
        raise ValidationError("selected and truth must have the same length")
    negatives = int((~selected).sum())
    if negatives == 0:
        return 0.0
    return float(np.sum(~selected & truth)) / negatives


def prediction_mse(coef: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Mean squared prediction error per response entry on a test set."""
    coef = np.asarray(coef, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[1] != coef.shape[0] or y.shape != (x.shape[0], coef.shape[1]):
        raise ValidationError("shape mismatch between coef, x, and y")
    resid = y - x @ coef
    return float(np.mean(resid**2))


def selection_metrics(selected: np.ndarray, truth: np.ndarray, scores: np.ndarray) -> dict:
    """AUC/FDR/FOR triple for one selection at one level."""
    return {
        "auc": auc(scores, truth),
        "fdr": fdr(selected, truth),
        "for": false_omission_rate(selected, truth),
    }
