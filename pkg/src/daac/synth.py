"""Planted community instances with known signed inter-community relations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .ingest import MentionEvent, Relation, add_truth, build_dataset

AUSTRALIA_PARTIES = ("Liberals", "Nationalists", "Liberal Nationalists", "Labors", "Greens")


def relation_matrix(k, alliances=(), none=(), default=Relation.ANTAGONISM):
    """k x k relation table: ``default`` off the diagonal except listed pairs."""
    rel = [[default] * k for _ in range(k)]
    for pairs, value in ((alliances, Relation.ALLIANCE), (none, Relation.NONE)):
        for a, b in pairs:
            rel[a][b] = rel[b][a] = value
    for i in range(k):
        rel[i][i] = Relation.NONE
    return tuple(tuple(row) for row in rel)


@dataclass(frozen=True)
class PlantedSpec:
    n: int = 200
    k: int = 4
    sizes: tuple | None = None
    p_in: float = 0.2
    p_out: float = 0.01
    w_in_mean: float = 1.0
    relations: tuple | None = None
    p_att_in: float = 0.1
    p_att_out: float = 0.05
    att_strength: float = 1.0
    noise: float = 0.0
    seed: int = 0
    names: tuple | None = None

    def resolved_sizes(self):
        if self.sizes is not None:
            return tuple(int(s) for s in self.sizes)
        base, extra = divmod(self.n, self.k)
        return tuple(base + (1 if c < extra else 0) for c in range(self.k))

    def resolved_relations(self):
        if self.relations is None:
            return relation_matrix(self.k)
        return tuple(tuple(Relation(r) for r in row) for row in self.relations)

    def resolved_names(self):
        if self.names is not None:
            return tuple(self.names)
        return tuple(f"C{c}" for c in range(self.k))

    def validate(self):
        sizes = self.resolved_sizes()
        if self.k < 1 or len(sizes) != self.k or sum(sizes) != self.n:
            raise ConfigurationError(f"sizes {sizes} do not partition n={self.n} into k={self.k}")
        if min(sizes) < 2:
            raise ConfigurationError(
                "every community needs >= 2 members to guarantee no isolated users"
            )
        for name in ("p_in", "p_out", "p_att_in", "p_att_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name}={p} is not a probability")
        if not self.p_in > self.p_out:
            raise ConfigurationError(f"need p_in > p_out, got {self.p_in} <= {self.p_out}")
        if not 0.0 <= self.noise < 0.5:
            raise ConfigurationError("noise must lie in [0, 0.5)")
        if self.w_in_mean <= 0 or self.att_strength <= 0:
            raise ConfigurationError("w_in_mean and att_strength must be positive")
        rel = self.resolved_relations()
        if len(rel) != self.k or any(len(row) != self.k for row in rel):
            raise ConfigurationError("relations must be k x k")
        for i in range(self.k):
            for j in range(self.k):
                if i != j and rel[i][j] != rel[j][i]:
                    raise ConfigurationError(f"relations not symmetric at ({i}, {j})")
        names = self.resolved_names()
        if len(set(names)) != self.k:
            raise ConfigurationError("community names must be k distinct strings")


@dataclass
class PlantedInstance:
    dataset: object
    spec: PlantedSpec
    community: np.ndarray  # generator-side community index per user
    raw: dict = field(default_factory=dict)

    @property
    def R(self):
        return self.dataset.R

    @property
    def S(self):
        return self.dataset.S

    @property
    def labels(self):
        return self.dataset.label_list()

    @property
    def truth_relations(self):
        return self.dataset.truth_relations


def _user_ids(n):
    width = len(str(max(n - 1, 0)))
    return [f"u{i:0{width}d}" for i in range(n)]


def generate(spec):
    """Sample R and S from a planted partition and build the cleaned dataset.

    The raw interactions and mention events pass through
    :func:`daac.ingest.build_dataset`, so the generated matrices are exactly
    what ingesting the written TSV files would produce.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    sizes = spec.resolved_sizes()
    rel = spec.resolved_relations()
    names = spec.resolved_names()
    n = spec.n
    comm = np.repeat(np.arange(spec.k), sizes)
    ids = _user_ids(n)

    iu, ju = np.triu_indices(n, k=1)
    same = comm[iu] == comm[ju]
    prob = np.where(same, spec.p_in, spec.p_out)
    hit = rng.random(iu.size) < prob
    weights = 1.0 + rng.poisson(spec.w_in_mean, size=iu.size)
    edges = {(int(i), int(j)): float(w) for i, j, w in zip(iu[hit], ju[hit], weights[hit])}

    deg = np.zeros(n, dtype=np.int64)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    for i in np.flatnonzero(deg == 0):
        if deg[i]:
            continue
        mates = np.flatnonzero((comm == comm[i]) & (np.arange(n) != i))
        j = int(rng.choice(mates))
        edges[(min(i, j), max(i, j))] = float(1 + rng.poisson(spec.w_in_mean))
        deg[i] += 1
        deg[j] += 1

    sign_table = np.zeros((spec.k, spec.k))
    for a in range(spec.k):
        for b in range(spec.k):
            if a == b:
                sign_table[a, b] = 1.0
            elif rel[a][b] is Relation.ALLIANCE:
                sign_table[a, b] = 1.0
            elif rel[a][b] is Relation.ANTAGONISM:
                sign_table[a, b] = -1.0
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    ci, cj = comm[ii], comm[jj]
    p_att = np.where(ci == cj, spec.p_att_in, spec.p_att_out)
    sign = sign_table[ci, cj]
    emit = (rng.random(ii.size) < p_att) & (sign != 0)
    flip = rng.random(ii.size) < spec.noise
    values = np.where(flip, -sign, sign) * spec.att_strength

    interactions = {(ids[i], ids[j]): w for (i, j), w in edges.items()}
    mentions = [
        MentionEvent(ids[i], ids[j], float(v)) for i, j, v in zip(ii[emit], jj[emit], values[emit])
    ]
    labels = {ids[i]: names[comm[i]] for i in range(n)}
    truth = set()
    for a in range(spec.k):
        for b in range(a + 1, spec.k):
            add_truth(truth, names[a], names[b], rel[a][b])
    dataset = build_dataset(interactions, mentions, labels, truth)
    return PlantedInstance(
        dataset=dataset,
        spec=spec,
        community=comm,
        raw={"interactions": interactions, "mentions": mentions},
    )


def australia_like_spec(seed=0, noise=0.05):
    """Five parties, a three-party coalition, antagonism between all others."""
    return PlantedSpec(
        n=225,
        k=5,
        p_in=0.2,
        p_out=0.01,
        relations=relation_matrix(5, alliances=[(0, 1), (0, 2), (1, 2)]),
        p_att_in=0.1,
        p_att_out=0.05,
        noise=noise,
        seed=seed,
        names=AUSTRALIA_PARTIES,
    )


def australia_like(seed=0, noise=0.05):
    return generate(australia_like_spec(seed, noise))


def shuffle_relations(truth, rng):
    """Randomly permute relation values across unordered label pairs."""
    pairs = sorted({tuple(sorted((a, b))) for a, b, _ in truth if a != b})
    lookup = {(a, b): r for a, b, r in truth}
    values = [lookup[p] for p in pairs]
    order = rng.permutation(len(values))
    shuffled = set()
    for (a, b), idx in zip(pairs, order):
        add_truth(shuffled, a, b, values[idx])
    return shuffled
