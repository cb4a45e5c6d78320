"""NMI, ARI and Purity from a contingency table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

NMI_NORMALIZATIONS = ("sqrt", "min", "max", "mean")


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    pred_labels: tuple = ()
    truth_labels: tuple = ()

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    @property
    def total(self):
        return int(self.counts.sum())


def contingency(pred, truth):
    """``counts[p, t]`` = number of items in predicted cluster p with true label t.

    Rows and columns follow the sorted distinct values of each partition.
    """
    pred = list(pred)
    truth = list(truth)
    if len(pred) != len(truth):
        raise DimensionError(f"length mismatch: {len(pred)} predictions, {len(truth)} labels")
    if not pred:
        raise DimensionError("cannot tabulate an empty partition")
    p_vals, p_idx = np.unique(np.asarray(pred), return_inverse=True)
    t_vals, t_idx = np.unique(np.asarray(truth), return_inverse=True)
    counts = np.zeros((p_vals.size, t_vals.size), dtype=np.int64)
    np.add.at(counts, (p_idx.ravel(), t_idx.ravel()), 1)
    return ContingencyTable(counts, tuple(p_vals.tolist()), tuple(t_vals.tolist()))


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(table, normalization="sqrt"):
    """Normalized mutual information (natural log).

    When a normalizer is zero: 1.0 if both partitions are a single cluster,
    otherwise 0.0.
    """
    if normalization not in NMI_NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NMI_NORMALIZATIONS}")
    c = table.counts
    n = table.total
    a, b = table.row_sums, table.col_sums
    h_p, h_t = _entropy(a, n), _entropy(b, n)
    nz = c > 0
    outer = np.outer(a, b)[nz]
    mi = float(np.sum(c[nz] / n * np.log(c[nz] * n / outer)))
    denom = {
        "sqrt": np.sqrt(h_p * h_t),
        "min": min(h_p, h_t),
        "max": max(h_p, h_t),
        "mean": (h_p + h_t) / 2,
    }[normalization]
    if denom == 0:
        return 1.0 if c.shape == (1, 1) else 0.0
    return float(min(max(mi / denom, 0.0), 1.0))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def ari(table):
    """Hubert-Arabie adjusted Rand index; 1.0 when the normalizer vanishes."""
    n = table.total
    sum_ij = float(_comb2(table.counts).sum())
    sum_a = float(_comb2(table.row_sums).sum())
    sum_b = float(_comb2(table.col_sums).sum())
    expected = sum_a * sum_b / float(_comb2(n))
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0:
        return 1.0
    return (sum_ij - expected) / denom


def purity(table):
    return float(table.counts.max(axis=1).sum()) / table.total


def score_all(pred, truth, normalization="sqrt"):
    table = contingency(pred, truth)
    return {
        "nmi": nmi(table, normalization),
        "ari": ari(table) if table.total >= 2 else 1.0,
        "purity": purity(table),
    }
