"""Run reports: a versioned JSON schema and a plain-text table renderer."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

SCHEMA_VERSION = 1

_COLORS = {"antagonism": "\033[31m", "alliance": "\033[32m"}
_RESET = "\033[0m"


@dataclass
class RunReport:
    method: str
    config: dict
    n: int
    k: int
    users: list
    converged: bool
    iterations: int
    objective: float
    U: list
    H: list
    H_symmetric: list
    H_normalized: list
    assignment: list
    community_labels: dict = field(default_factory=dict)  # str(community) -> label
    relations: list = field(default_factory=list)
    metrics: dict | None = None
    relation_accuracy: float | None = None
    correct_relations: int | None = None
    total_relations: int | None = None
    timing: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report fields {sorted(unknown)}")
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def matrix_to_list(a):
    return np.asarray(a, dtype=np.float64).tolist()


def relations_to_list(report, labels=None):
    out = []
    for i, j, rel, strength in report.pairs():
        row = {"i": i, "j": j, "relation": rel.value, "strength": strength}
        if labels:
            row["label_i"], row["label_j"] = labels[i], labels[j]
        out.append(row)
    return out


def _fmt(x):
    return f"{x:.6g}"


def render_table(report, color=False):
    """Human-readable summary; ANSI colors only when ``color`` is set."""
    labels = report.community_labels or {}

    def name(c):
        return labels.get(str(c), f"C{c}")

    lines = [
        f"method      {report.method}",
        f"users       {report.n}",
        f"communities {report.k}",
        f"converged   {report.converged} after {report.iterations} iterations",
        f"objective   {_fmt(report.objective)}",
        "",
        "community sizes",
    ]
    sizes = np.bincount(np.asarray(report.assignment, dtype=np.int64), minlength=report.k)
    for c in range(report.k):
        lines.append(f"  {name(c):<24} {int(sizes[c])}")
    lines += ["", "relations"]
    for row in report.relations:
        rel = row["relation"]
        shown = f"{_COLORS[rel]}{rel}{_RESET}" if color and rel in _COLORS else rel
        lines.append(
            f"  {name(row['i']):<24} {name(row['j']):<24} {shown:<12} {_fmt(row['strength'])}"
        )
    if report.metrics is not None:
        lines += ["", "metrics"]
        for key in sorted(report.metrics):
            lines.append(f"  {key:<8} {_fmt(report.metrics[key])}")
    if report.relation_accuracy is not None:
        lines.append(
            f"  relations {report.correct_relations}/{report.total_relations} correct "
            f"(accuracy {_fmt(report.relation_accuracy)})"
        )
    if report.timing is not None:
        lines += ["", f"time        {_fmt(report.timing.get('seconds', float('nan')))} s"]
    return "\n".join(lines) + "\n"
