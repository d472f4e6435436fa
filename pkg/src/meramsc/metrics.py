"""External clustering metrics: pairwise F-score/precision/recall, NMI, ARI, ACC."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels

METRIC_NAMES = ("fscore", "precision", "recall", "nmi", "ari", "acc")


@dataclass(frozen=True)
class MetricsReport:
    fscore: float
    precision: float
    recall: float
    nmi: float
    ari: float
    acc: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def _codes(labels) -> tuple[np.ndarray, int]:
    _, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes.astype(np.int64).ravel(), int(codes.max()) + 1 if codes.size else 0


def contingency(truth, pred) -> np.ndarray:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ValueError(f"label arrays must be 1-D and equal length, got {truth.shape} and {pred.shape}")
    if truth.size == 0:
        raise ValueError("label arrays are empty")
    a, na = _codes(truth)
    b, nb = _codes(pred)
    return kernels.contingency(a, b, na, nb)


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def _pair_counts(c: np.ndarray) -> tuple[float, float, float, float]:
    """(same-same pairs, same-truth pairs, same-pred pairs, all pairs)."""
    n = c.sum()
    return _comb2(c).sum(), _comb2(c.sum(axis=1)).sum(), _comb2(c.sum(axis=0)).sum(), float(_comb2(n))


def pair_metrics(truth, pred) -> tuple[float, float, float]:
    tp, same_t, same_p, _ = _pair_counts(contingency(truth, pred))
    precision = tp / same_p if same_p > 0 else 0.0
    recall = tp / same_t if same_t > 0 else 0.0
    fscore = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return float(fscore), float(precision), float(recall)


def _entropy(counts: np.ndarray, n: float) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(truth, pred, average: str = "arithmetic") -> float:
    """Mutual information normalized by the mean of the two entropies.

    ``average="geometric"`` uses ``sqrt(H_t * H_p)`` instead.
    """
    c = contingency(truth, pred).astype(np.float64)
    n = c.sum()
    h_t = _entropy(c.sum(axis=1), n)
    h_p = _entropy(c.sum(axis=0), n)
    if h_t == 0 and h_p == 0:
        return 1.0
    row = c.sum(axis=1, keepdims=True)
    col = c.sum(axis=0, keepdims=True)
    nz = c > 0
    mi = float((c[nz] / n * np.log(c[nz] * n / (row @ col)[nz])).sum())
    if average == "arithmetic":
        denom = (h_t + h_p) / 2
    elif average == "geometric":
        denom = np.sqrt(h_t * h_p)
    else:
        raise ValueError(f"unknown average {average!r}")
    if denom == 0:
        return 0.0
    return float(min(max(mi / denom, 0.0), 1.0))


def ari(truth, pred) -> float:
    """Hubert-Arabie adjusted Rand index."""
    c = contingency(truth, pred)
    index, same_t, same_p, total = _pair_counts(c)
    expected = same_t * same_p / total if total > 0 else 0.0
    max_index = (same_t + same_p) / 2
    if max_index == expected:
        # degenerate: both partitions trivial in the same way
        identical = c.shape[0] == c.shape[1] and np.count_nonzero(c) == c.shape[0]
        return 1.0 if identical else 0.0
    return float((index - expected) / (max_index - expected))


def acc(truth, pred) -> float:
    """Accuracy under the best one-to-one cluster-to-class matching."""
    c = contingency(truth, pred)
    rows, cols = linear_sum_assignment(c, maximize=True)
    return float(c[rows, cols].sum() / c.sum())


def evaluate(truth, pred) -> MetricsReport:
    f, p, r = pair_metrics(truth, pred)
    return MetricsReport(fscore=f, precision=p, recall=r, nmi=nmi(truth, pred), ari=ari(truth, pred), acc=acc(truth, pred))


def summarize(reports) -> dict[str, tuple[float, float]]:
    """Mean and population standard deviation of each metric over repeated runs."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    table = np.array([[getattr(r, k) for k in METRIC_NAMES] for r in reports])
    return {k: (float(m), float(s)) for k, m, s in zip(METRIC_NAMES, table.mean(axis=0), table.std(axis=0))}
