"""Matched-sampling hypothesis test linking attitudes to community relations.

For every cross-community pair with a negative (positive) attitude, a control
user from another community, toward whom the author expressed no negative
(positive) attitude, is drawn. Indicators of antagonism (alliance) for the
treated and control pairs are compared with a one-sided two-sample t-test.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DegenerateVarianceError
from .ingest import Relation, truth_lookup

log = logging.getLogger(__name__)

ALPHA_LEVEL = 0.01
MODES = ("negative", "positive")

_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAX_ITER = 10000


@dataclass
class MatchedSamples:
    T_p: np.ndarray
    T_r: np.ndarray
    pair_log: list = field(default_factory=list)  # (i, j, control) triples
    skipped: int = 0
    mode: str = "negative"


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    log_p_value: float
    reject_at: float = ALPHA_LEVEL
    method: str = "welch"

    @property
    def rejected(self):
        return self.p_value < self.reject_at

    def to_dict(self):
        return {
            "t_statistic": self.t_statistic,
            "degrees_of_freedom": self.degrees_of_freedom,
            "p_value": self.p_value,
            "log_p_value": self.log_p_value,
            "reject_at": self.reject_at,
            "rejected": self.rejected,
            "method": self.method,
        }


# -- regularized incomplete beta ------------------------------------------------


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_front(a, b, x):
    return a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)


def log_betainc(a, b, x):
    """``log I_x(a, b)``, accurate far into the lower tail."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return -math.inf
    if x >= 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(a, b, x) + math.log(_betacf(a, b, x)) - math.log(a)
    upper = math.exp(_log_front(b, a, 1.0 - x)) * _betacf(b, a, 1.0 - x) / b
    return math.log1p(-upper)


def betainc(a, b, x):
    """Regularized incomplete beta function ``I_x(a, b)``."""
    return math.exp(log_betainc(a, b, x))


def t_sf(t, df):
    """``P(T > t)`` for Student's t with ``df`` degrees of freedom.

    Returns (p, log p). For t < 0 the value is ``1 - P(T > |t|)``.
    """
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0:
        return 0.5, math.log(0.5)
    x = df / (df + t * t)
    log_tail = math.log(0.5) + log_betainc(df / 2.0, 0.5, x)
    tail = math.exp(log_tail)
    if t > 0:
        return tail, log_tail
    p = 1.0 - tail
    return p, math.log1p(-tail)


# -- t-tests -----------------------------------------------------------------------


def welch_t_test_one_sided(T_p, T_r, equal_var=False, reject_at=ALPHA_LEVEL):
    """One-sided test of ``mean(T_p) > mean(T_r)``.

    Welch's unequal-variance statistic by default; ``equal_var=True`` gives
    the pooled-variance Student test.
    """
    x = np.asarray(T_p, dtype=np.float64)
    y = np.asarray(T_r, dtype=np.float64)
    nx, ny = x.size, y.size
    if nx < 2 or ny < 2:
        raise DegenerateVarianceError(
            f"each sample needs at least two observations, got {nx} and {ny}"
        )
    vx, vy = x.var(ddof=1), y.var(ddof=1)
    if vx == 0 and vy == 0:
        raise DegenerateVarianceError("both samples have zero variance")
    diff = x.mean() - y.mean()
    if equal_var:
        df = nx + ny - 2.0
        pooled = ((nx - 1) * vx + (ny - 1) * vy) / df
        se2 = pooled * (1.0 / nx + 1.0 / ny)
        method = "student"
    else:
        ax, ay = vx / nx, vy / ny
        se2 = ax + ay
        df = se2 * se2 / (ax * ax / (nx - 1) + ay * ay / (ny - 1))
        method = "welch"
    t = float(diff / math.sqrt(se2))
    p, log_p = t_sf(t, df)
    return TTestResult(t, float(df), p, log_p, reject_at, method)


def permutation_test_one_sided(T_p, T_r, reject_at=ALPHA_LEVEL, n_resamples=10000, seed=0):
    """Permutation test of ``mean(T_p) > mean(T_r)``.

    Exact (hypergeometric tail) for 0/1 data, Monte Carlo otherwise.
    Reported ``t_statistic`` is the difference in means; df is NaN.
    """
    x = np.asarray(T_p, dtype=np.float64)
    y = np.asarray(T_r, dtype=np.float64)
    nx, ny = x.size, y.size
    if nx == 0 or ny == 0:
        raise DegenerateVarianceError("permutation test needs non-empty samples")
    diff = float(x.mean() - y.mean())
    pooled = np.concatenate([x, y])
    if np.all((pooled == 0) | (pooled == 1)):
        total_ones = int(pooled.sum())
        observed = int(x.sum())
        n = nx + ny
        logs = [
            _log_comb(total_ones, j) + _log_comb(n - total_ones, nx - j) - _log_comb(n, nx)
            for j in range(observed, min(total_ones, nx) + 1)
            if nx - j <= n - total_ones
        ]
        log_p = _logsumexp(logs) if logs else -math.inf
        log_p = min(log_p, 0.0)
        return TTestResult(diff, float("nan"), math.exp(log_p), log_p, reject_at, "permutation-exact")
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_resamples):
        perm = rng.permutation(pooled)
        if perm[:nx].mean() - perm[nx:].mean() >= diff:
            hits += 1
    p = (hits + 1) / (n_resamples + 1)
    return TTestResult(diff, float("nan"), p, math.log(p), reject_at, "permutation-mc")


def _log_comb(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _logsumexp(xs):
    m = max(xs)
    if m == -math.inf:
        return m
    return m + math.log(sum(math.exp(v - m) for v in xs))


# -- matched sampling --------------------------------------------------------------


def matched_sample(S, labels, truth_relations, mode="negative", seed=0):
    """Treatment/control indicator vectors for one attitude polarity.

    ``labels`` is a sequence of community names aligned with the rows of S.
    Pairs without any eligible control are skipped and counted.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    labels = list(labels)
    n = S.n_rows
    if len(labels) != n:
        raise ConsistencyError("labels must cover every user")
    names, lab = np.unique(np.asarray(labels), return_inverse=True)
    lab = lab.ravel()
    lookup = truth_lookup(truth_relations)
    tested = Relation.ANTAGONISM if mode == "negative" else Relation.ALLIANCE
    m = len(names)
    is_tested = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(m):
            if a == b:
                continue
            rel = lookup.get((names[a], names[b]))
            if rel is None:
                continue
            is_tested[a, b] = rel is tested

    def has_truth(a, b):
        if (names[a], names[b]) not in lookup:
            raise ConsistencyError(f"no ground-truth relation for ({names[a]}, {names[b]})")

    rng = np.random.default_rng(seed)
    csr = S.csr
    T_p, T_r, pair_log = [], [], []
    skipped = 0
    for i in range(n):
        lo, hi = csr.indptr[i], csr.indptr[i + 1]
        cols = csr.indices[lo:hi]
        vals = csr.data[lo:hi]
        treated = cols[(vals < 0) if mode == "negative" else (vals > 0)]
        treated = treated[lab[treated] != lab[i]]
        if treated.size == 0:
            continue
        excluded = np.zeros(n, dtype=bool)
        excluded[cols[(vals < 0) if mode == "negative" else (vals > 0)]] = True
        candidates = np.flatnonzero((lab != lab[i]) & ~excluded)
        for j in treated:
            has_truth(lab[i], lab[j])
            if candidates.size == 0:
                skipped += 1
                continue
            k = int(candidates[rng.integers(candidates.size)])
            has_truth(lab[i], lab[k])
            T_p.append(1.0 if is_tested[lab[i], lab[j]] else 0.0)
            T_r.append(1.0 if is_tested[lab[i], lab[k]] else 0.0)
            pair_log.append((i, int(j), k))
    if skipped:
        log.warning("%s mode: skipped %d pair(s) with no eligible control", mode, skipped)
    return MatchedSamples(np.array(T_p), np.array(T_r), pair_log, skipped, mode)


def run_mode(dataset, mode, seed=0, equal_var=False, permutation_fallback=False,
              reject_at=ALPHA_LEVEL):
    """Matched sampling plus the one-sided test for one attitude polarity."""
    samples = matched_sample(dataset.S, dataset.label_list(), dataset.truth_relations, mode, seed)
    try:
        result = welch_t_test_one_sided(samples.T_p, samples.T_r, equal_var, reject_at)
    except DegenerateVarianceError:
        if not permutation_fallback:
            raise
        result = permutation_test_one_sided(samples.T_p, samples.T_r, reject_at, seed=seed)
    return samples, result


def _require_truth(dataset):
    if dataset.labels is None or dataset.truth_relations is None:
        raise ConsistencyError("hypothesis validation needs labels and truth relations")


def validate_hypothesis(dataset, seed=0, equal_var=False, permutation_fallback=False,
                        reject_at=ALPHA_LEVEL):
    """Run the negative- and positive-attitude tests on a labeled dataset.

    Mode ``m`` samples controls with seed ``seed + m``.

    Returns:
        dict mode -> (MatchedSamples, TTestResult)
    """
    _require_truth(dataset)
    return {
        mode: run_mode(dataset, mode, seed + offset, equal_var, permutation_fallback, reject_at)
        for offset, mode in enumerate(MODES)
    }
