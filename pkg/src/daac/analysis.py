"""Turning fitted factors into partitions, labels and relation reports."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from .ingest import Relation, truth_lookup

EMPTY_LABEL = "(empty)"


@dataclass(frozen=True)
class Assignment:
    community_of: np.ndarray
    k: int
    zero_rows: tuple = ()

    def __len__(self):
        return len(self.community_of)

    def tolist(self):
        return self.community_of.tolist()


@dataclass
class RelationReport:
    k: int
    relation: list  # k x k of Relation; diagonal is Relation.NONE and carries no meaning
    strength: np.ndarray
    intra: np.ndarray
    labels: dict | None = None

    def pairs(self):
        """Unordered off-diagonal pairs ``(i, j, relation, strength)`` with i < j."""
        return [
            (i, j, self.relation[i][j], float(self.strength[i, j]))
            for i in range(self.k)
            for j in range(i + 1, self.k)
        ]

    def counts(self):
        return Counter(rel for _, _, rel, _ in self.pairs())


def assign(U):
    """Hard assignment by largest membership; ties go to the lowest index."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2:
        raise DimensionError("U must be 2-D")
    zero = np.flatnonzero(~np.any(U > 0, axis=1))
    if zero.size:
        warnings.warn(f"{zero.size} user(s) have all-zero membership; assigned to community 0",
                      stacklevel=2)
    return Assignment(np.argmax(U, axis=1), U.shape[1], tuple(zero.tolist()))


def extract_relations(H, tau=0.05, labels=None):
    """Classify each community pair from the symmetrized relation matrix.

    A pair is ``NONE`` when its magnitude is at most ``tau`` times the
    largest off-diagonal magnitude, otherwise its sign decides.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError("H must be square")
    k = H.shape[0]
    if k < 2:
        raise ConfigurationError("need at least two communities")
    if not 0 <= tau < 1:
        raise ConfigurationError("tau must lie in [0, 1)")
    strength = (H + H.T) / 2
    off = ~np.eye(k, dtype=bool)
    cutoff = tau * np.abs(strength[off]).max()
    relation = [[Relation.NONE] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            if i == j or abs(strength[i, j]) <= cutoff:
                continue
            relation[i][j] = Relation.ANTAGONISM if strength[i, j] < 0 else Relation.ALLIANCE
    return RelationReport(k, relation, strength, np.diag(H).copy(), labels)


def majority_label(assignment, truth_labels):
    """Most frequent true label per community; ties go to the smallest label."""
    truth_labels = list(truth_labels)
    if len(truth_labels) != len(assignment):
        raise DimensionError("assignment and labels differ in length")
    members = [Counter() for _ in range(assignment.k)]
    for c, lab in zip(assignment.community_of.tolist(), truth_labels):
        members[c][lab] += 1
    out = {}
    for c, counter in enumerate(members):
        if not counter:
            out[c] = EMPTY_LABEL
            continue
        top = max(counter.values())
        out[c] = min(lab for lab, cnt in counter.items() if cnt == top)
    return out


def aggregate_attitudes(S, assignment, k=None):
    """Sum of attitudes between every ordered pair of communities."""
    k = assignment.k if k is None else k
    if len(assignment) != S.n_rows or S.n_rows != S.n_cols:
        raise DimensionError("assignment length must equal the number of users")
    rows, cols = S.coords()
    c = assignment.community_of
    A = np.zeros((k, k))
    np.add.at(A, (c[rows], c[cols]), S.data)
    return A


def relation_accuracy(report, labels, truth):
    """Fraction of true unordered label pairs whose detected relation matches.

    Pairs whose labels are missing from ``labels`` or shared by several
    communities count as wrong. An empty truth set scores 1.0.
    """
    correct, total = count_correct_relations(report, labels, truth)
    return 1.0 if total == 0 else correct / total


def count_correct_relations(report, labels, truth):
    """``(correct, total)`` over the unordered label pairs in ``truth``."""
    lookup = truth_lookup(truth)
    pairs = sorted({tuple(sorted((a, b))) for a, b in lookup if a != b})
    if not pairs:
        return 0, 0
    by_name = {}
    for c, name in labels.items():
        by_name.setdefault(name, []).append(c)
    dup = sorted(name for name, cs in by_name.items() if len(cs) > 1 and name != EMPTY_LABEL)
    if dup:
        warnings.warn(f"ambiguous community labels {dup}; their pairs count as wrong",
                      stacklevel=2)
    correct = 0
    for a, b in pairs:
        ca, cb = by_name.get(a, []), by_name.get(b, [])
        if len(ca) != 1 or len(cb) != 1:
            continue
        if report.relation[ca[0]][cb[0]] is lookup[(a, b)]:
            correct += 1
    return correct, len(pairs)
