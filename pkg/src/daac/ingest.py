"""Reading interaction/mention TSV files and building R, S and ground truth.

File formats (UTF-8, tab separated, ``#`` starts a comment line):

* interactions: ``src  dst  weight`` (weight > 0, directed, duplicates summed)
* mentions:     ``author  target  sentiment`` (signed, pre-scored)
* labels:       ``user  label``
* truth:        ``labelA  labelB  antagonism|alliance|none``
"""

from __future__ import annotations

import logging
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, DomainError, ParseError
from .matcore import SparseMatrix

log = logging.getLogger(__name__)


class Relation(str, Enum):
    ANTAGONISM = "antagonism"
    ALLIANCE = "alliance"
    NONE = "none"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class MentionEvent:
    author: str
    target: str
    sentiment: float


@dataclass
class LabeledDataset:
    users: list
    R: SparseMatrix
    S: SparseMatrix
    labels: dict | None = None
    truth_relations: set | None = None
    stats: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.users)

    @property
    def index(self):
        return {u: i for i, u in enumerate(self.users)}

    def label_list(self):
        """Labels aligned with ``users``; raises if any user is unlabeled."""
        if self.labels is None:
            raise ConsistencyError("dataset has no labels")
        missing = [u for u in self.users if u not in self.labels]
        if missing:
            raise ConsistencyError(f"{len(missing)} user(s) lack a label, e.g. {missing[0]!r}")
        return [self.labels[u] for u in self.users]


def _rows(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line.split("\t")


def _number(text, path, lineno, what):
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", path, lineno) from None
    if not math.isfinite(x):
        raise ParseError(f"{what} {text!r} is not finite", path, lineno)
    return x


def load_interactions(path):
    """Directed weighted edges as ``{(src, dst): weight}``; duplicates summed."""
    edges = defaultdict(float)
    for lineno, parts in _rows(path):
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ParseError("expected 'src<TAB>dst<TAB>weight'", path, lineno)
        w = _number(parts[2], path, lineno, "weight")
        if w <= 0:
            raise DomainError(f"{path}:{lineno}: weight must be positive, got {w}")
        edges[(parts[0], parts[1])] += w
    return dict(edges)


def load_mentions(path):
    """Mention events; self-mentions are dropped and counted in the log."""
    events = []
    dropped = 0
    for lineno, parts in _rows(path):
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ParseError("expected 'author<TAB>target<TAB>sentiment'", path, lineno)
        s = _number(parts[2], path, lineno, "sentiment")
        if parts[0] == parts[1]:
            dropped += 1
            continue
        events.append(MentionEvent(parts[0], parts[1], s))
    if dropped:
        log.info("%s: dropped %d self-mention(s)", path, dropped)
    return events


def load_labels(path):
    labels = {}
    for lineno, parts in _rows(path):
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError("expected 'user<TAB>label'", path, lineno)
        if labels.get(parts[0], parts[1]) != parts[1]:
            raise ParseError(f"user {parts[0]!r} has two labels", path, lineno)
        labels[parts[0]] = parts[1]
    return labels


def parse_relation(word):
    try:
        return Relation(word.strip().lower())
    except ValueError:
        raise ValueError(f"unknown relation {word!r}") from None


def add_truth(truth, a, b, rel):
    """Insert ``(a, b, rel)`` and its mirror, rejecting contradictions."""
    for x, y in ((a, b), (b, a)):
        for other in Relation:
            if other is not rel and (x, y, other) in truth:
                raise ConsistencyError(f"conflicting relations for ({x}, {y}): {other} vs {rel}")
        truth.add((x, y, rel))


def load_truth_relations(path):
    """Ground-truth relations between label pairs, closed under symmetry."""
    truth = set()
    for lineno, parts in _rows(path):
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ParseError("expected 'labelA<TAB>labelB<TAB>relation'", path, lineno)
        try:
            rel = parse_relation(parts[2])
        except ValueError as e:
            raise ParseError(str(e), path, lineno) from None
        try:
            add_truth(truth, parts[0], parts[1], rel)
        except ConsistencyError as e:
            raise ConsistencyError(f"{path}:{lineno}: {e}") from None
    return truth


def truth_lookup(truth):
    """``{(a, b): Relation}`` view of a truth set."""
    return {(a, b): r for a, b, r in truth}


def build_dataset(interactions, mentions, labels=None, truth=None, symmetrize_attitudes=False):
    """Apply the preprocessing rules and index users.

    1. ``R`` is the directed interaction counts plus their transpose.
    2. Users without any interaction are removed with all their mentions.
    3. Negative mentions between users who interact are ignored; every other
       mention adds its sentiment to ``S[author, target]``.
    4. Accumulations that cancel to exactly zero are dropped.
    5. Users are indexed in lexicographic id order.
    """
    degree = defaultdict(float)
    for (a, b), w in interactions.items():
        if a == b:
            continue
        degree[a] += w
        degree[b] += w
    mentioned = {e.author for e in mentions} | {e.target for e in mentions}
    users = sorted(u for u, d in degree.items() if d > 0)
    if not users:
        raise ConsistencyError("no users with interactions remain after cleaning")
    idx = {u: i for i, u in enumerate(users)}
    n = len(users)

    self_loops = sum(1 for a, b in interactions if a == b)
    pairs = [(idx[a], idx[b], w) for (a, b), w in interactions.items() if a != b]
    r, c, v = (np.array(x) for x in zip(*pairs)) if pairs else ([], [], [])
    R = SparseMatrix.from_entries(
        n, n, np.concatenate([r, c]), np.concatenate([c, r]), np.concatenate([v, v]),
        nonnegative=True,
    )
    rr, cc = R.coords()
    linked = set(zip(rr.tolist(), cc.tolist()))

    acc = defaultdict(float)
    removed_events = suppressed = 0
    for e in mentions:
        i, j = idx.get(e.author), idx.get(e.target)
        if i is None or j is None:
            removed_events += 1
            continue
        if e.sentiment < 0 and (i, j) in linked:
            suppressed += 1
            continue
        acc[(i, j)] += e.sentiment
    if symmetrize_attitudes:
        sym = defaultdict(float)
        for (i, j), s in acc.items():
            sym[(i, j)] += s / 2
            sym[(j, i)] += s / 2
        acc = sym
    acc = {key: s for key, s in acc.items() if s != 0.0}
    keys = sorted(acc)
    S = SparseMatrix.from_entries(
        n, n, [i for i, _ in keys], [j for _, j in keys], [acc[key] for key in keys]
    )

    all_users = {a for a, _ in interactions} | {b for _, b in interactions} | mentioned
    stats = {
        "users_in": len(all_users),
        "users_removed": len(all_users) - n,
        "users_out": n,
        "self_interactions_ignored": self_loops,
        "mentions_removed_with_users": removed_events,
        "negative_mentions_suppressed": suppressed,
    }

    if labels is not None:
        unknown = [u for u in labels if u not in all_users]
        if unknown:
            warnings.warn(
                f"{len(unknown)} labeled user(s) do not appear in the data; ignored",
                stacklevel=2,
            )
        labels = {u: lab for u, lab in labels.items() if u in idx}
    return LabeledDataset(users, R, S, labels, truth, stats)


def load_dataset(interactions_path, mentions_path, labels_path=None, truth_path=None,
                 symmetrize_attitudes=False):
    labels = load_labels(labels_path) if labels_path else None
    truth = load_truth_relations(truth_path) if truth_path else None
    return build_dataset(
        load_interactions(interactions_path),
        load_mentions(mentions_path),
        labels,
        truth,
        symmetrize_attitudes=symmetrize_attitudes,
    )


def _fmt(x):
    return repr(float(x))


def write_dataset(dataset, out_dir):
    """Write the dataset in the ingest formats; rebuilding yields the same matrices.

    Interactions are written once per unordered pair (upper triangle) so the
    symmetrization on reload restores ``R`` exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    users = dataset.users
    paths = {
        "interactions": out / "interactions.tsv",
        "mentions": out / "mentions.tsv",
    }
    rows, cols = dataset.R.coords()
    with open(paths["interactions"], "w", encoding="utf-8") as fh:
        for i, j, w in zip(rows, cols, dataset.R.data):
            if i < j:
                fh.write(f"{users[i]}\t{users[j]}\t{_fmt(w)}\n")
    rows, cols = dataset.S.coords()
    with open(paths["mentions"], "w", encoding="utf-8") as fh:
        for i, j, s in zip(rows, cols, dataset.S.data):
            fh.write(f"{users[i]}\t{users[j]}\t{_fmt(s)}\n")
    if dataset.labels is not None:
        paths["labels"] = out / "labels.tsv"
        with open(paths["labels"], "w", encoding="utf-8") as fh:
            for u in users:
                if u in dataset.labels:
                    fh.write(f"{u}\t{dataset.labels[u]}\n")
    if dataset.truth_relations is not None:
        paths["truth_relations"] = out / "truth_relations.tsv"
        seen = set()
        with open(paths["truth_relations"], "w", encoding="utf-8") as fh:
            for a, b, rel in sorted(dataset.truth_relations):
                if (b, a) in seen or a == b:
                    continue
                seen.add((a, b))
                fh.write(f"{a}\t{b}\t{rel.value}\n")
    return paths
