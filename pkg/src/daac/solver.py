"""Alternating optimization of the joint attitude/interaction objective.

The objective is::

    F(U, H) = ||W * (S - U H U^T)||_F^2 - lambda * Tr(U^T R_norm U)

with ``U >= 0`` (n x k memberships) and a signed ``H`` (k x k relations).
``U`` moves by a multiplicative square-root rule, ``H`` by a gradient step
with optional backtracking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DimensionError
from .matcore import (
    SparseMatrix,
    check_finite,
    degree_vector,
    frobenius_sq_masked,
    masked_apply,
    masked_lowrank,
    pos_neg_split,
    symmetric_normalize,
    weight_mask,
)

log = logging.getLogger(__name__)

U_RULES = ("mirrored", "gradient")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one fit.

    ``u_rule="gradient"`` splits every term of the membership update by the
    sign it carries in the objective's gradient. ``"mirrored"`` swaps the
    split for E1/E2, putting E1+/E2+ in the numerator; its fixed points then
    fit ``-S`` rather than ``S``.

    Convergence: the relative objective change over both half-steps is below
    ``tol``; when ``u_tol`` is set, the largest membership change of the
    last step must also be below it.
    """

    k: int = 2
    lam: float = 1e3
    alpha: float = 1e-3
    max_iters: int = 500
    tol: float = 1e-6
    eps_div: float = 1e-12
    seed: int = 0
    backtracking: bool = True
    max_backtracks: int = 30
    restarts: int = 1
    u_rule: str = "gradient"
    u_tol: float | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ConfigurationError("k must be >= 2")
        if self.lam < 0:
            raise ConfigurationError("lambda must be nonnegative")
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        if self.tol <= 0 or self.eps_div <= 0:
            raise ConfigurationError("tol and eps_div must be positive")
        if self.max_iters < 1 or self.restarts < 1 or self.max_backtracks < 0:
            raise ConfigurationError("max_iters and restarts must be >= 1")
        if self.u_tol is not None and self.u_tol <= 0:
            raise ConfigurationError("u_tol must be positive")
        if self.u_rule not in U_RULES:
            raise ConfigurationError(f"u_rule must be one of {U_RULES}")


@dataclass
class SolverState:
    U: np.ndarray
    H: np.ndarray
    iteration: int = 0
    objective: float = float("nan")


@dataclass
class UpdateIntermediates:
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray
    E4: np.ndarray
    Gamma: np.ndarray
    RU: np.ndarray  # R_norm @ U, reused by the numerator


@dataclass
class SolverResult:
    U: np.ndarray
    H: np.ndarray
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0
    seed: int = 0

    @property
    def objective(self):
        return self.objective_trace[-1]


@dataclass(frozen=True)
class Problem:
    """Preprocessed inputs shared by every iteration of a fit."""

    S: SparseMatrix
    W: SparseMatrix
    WWS: SparseMatrix
    R_norm: SparseMatrix

    @classmethod
    def build(cls, S, R):
        if S.shape != R.shape or S.n_rows != S.n_cols:
            raise DimensionError(f"S {S.shape} and R {R.shape} must be square and equal")
        W = weight_mask(S)
        return cls(S=S, W=W, WWS=masked_apply(W, S), R_norm=symmetric_normalize(R))

    @property
    def n(self):
        return self.S.n_rows


def _check_factors(W, U, H):
    n = W.n_rows
    if U.ndim != 2 or U.shape[0] != n:
        raise DimensionError(f"U must have {n} rows, got shape {U.shape}")
    k = U.shape[1]
    if H.shape != (k, k):
        raise DimensionError(f"H must be {k}x{k}, got {H.shape}")


def trace_term(R_norm, U):
    """``Tr(U^T R_norm U)`` as a sum over the stored entries of ``R_norm``."""
    return float(np.sum(U * (R_norm @ U)))


def objective(S, W, R_norm, U, H, lam):
    _check_factors(W, U, H)
    if R_norm.shape != W.shape:
        raise DimensionError("R_norm and W shapes differ")
    return frobenius_sq_masked(W, S, U, H) - lam * trace_term(R_norm, U)


def compute_intermediates(S, W, U, H, R_norm, lam, WWS=None):
    """E1..E4 and the orthogonality multiplier Gamma for the current (U, H)."""
    _check_factors(W, U, H)
    if WWS is None:
        WWS = masked_apply(W, S)
    UHt = U @ H.T
    UH = U @ H
    model = masked_lowrank(W, U, H, U)
    E1 = -(WWS @ UHt)
    E2 = -WWS.tdot(UH)
    E3 = model @ UHt
    E4 = model.tdot(UH)
    RU = R_norm @ U
    Gamma = -U.T @ (E1 + E2 + E3 + E4) + lam * (U.T @ RU)
    return UpdateIntermediates(E1, E2, E3, E4, Gamma, RU)


def u_factor(U, inter, lam, eps_div, rule="gradient"):
    """Elementwise multiplier ``sqrt(numerator / denominator)`` of the U step."""
    E1p, E1m = pos_neg_split(inter.E1)
    E2p, E2m = pos_neg_split(inter.E2)
    E3p, E3m = pos_neg_split(inter.E3)
    E4p, E4m = pos_neg_split(inter.E4)
    Gp, Gm = pos_neg_split(inter.Gamma)
    if rule == "mirrored":
        num = E1p + E2p + E3m + E4m
        den = E1m + E2m + E3p + E4p
    else:
        num = E1m + E2m + E3m + E4m
        den = E1p + E2p + E3p + E4p
    num = num + lam * inter.RU + U @ Gm
    den = den + U @ Gp + eps_div
    return np.sqrt(num / den)


def update_u(state, inter, R_norm, lam, eps_div, rule="gradient"):
    """One multiplicative membership step; returns the new U (state untouched).

    ``R_norm`` is accepted for interface symmetry; ``inter.RU`` already holds
    ``R_norm @ U``.
    """
    return check_finite(state.U * u_factor(state.U, inter, lam, eps_div, rule), "U")


def grad_h(S, W, U, H, WWS=None):
    """``dF/dH = -2 U^T (W*W*S) U + 2 U^T (W*W*U H U^T) U``."""
    _check_factors(W, U, H)
    if WWS is None:
        WWS = masked_apply(W, S)
    model = masked_lowrank(W, U, H, U)
    return 2.0 * (U.T @ (model @ U) - U.T @ (WWS @ U))


def update_h(H, grad, alpha, objective_fn, backtracking=True, max_backtracks=30, current=None):
    """Gradient step on H.

    With backtracking, ``alpha`` is halved until ``objective_fn`` does not
    increase; if every trial fails, H is returned unchanged with step 0.

    Returns:
        (new H, step size used)
    """
    if not np.any(grad):
        return H, 0.0
    if not backtracking:
        return H - alpha * grad, alpha
    f0 = objective_fn(H) if current is None else current
    step = alpha
    for _ in range(max_backtracks + 1):
        trial = H - step * grad
        if np.all(np.isfinite(trial)) and objective_fn(trial) <= f0:
            return trial, step
        step *= 0.5
    return H, 0.0


def init_factors(n, k, seed):
    rng = np.random.default_rng(seed)
    U = rng.uniform(0.1, 1.1, size=(n, k))
    H = rng.uniform(-0.1, 0.1, size=(k, k))
    return U, H


def _relative_change(prev, mid, cur):
    # Largest change over the U half-step, the H half-step and the full
    # iteration; opposite-signed half-steps must not look like convergence.
    return max(abs(mid - prev), abs(cur - mid), abs(cur - prev)) / (abs(prev) + 1e-12)


def fit_once(problem, config, seed=None, U0=None, H0=None, callback=None):
    """Run one alternating optimization from a random (or given) start.

    Raises:
        FloatingPointError: the iterates overflowed.
    """
    with np.errstate(over="raise", invalid="raise"):
        return _fit_once(problem, config, seed, U0, H0, callback)


def _fit_once(problem, config, seed, U0, H0, callback):
    seed = config.seed if seed is None else seed
    n, k = problem.n, config.k
    U, H = init_factors(n, k, seed)
    if U0 is not None:
        U = np.array(U0, dtype=np.float64)
    if H0 is not None:
        H = np.array(H0, dtype=np.float64)
    S, W, WWS, Rn, lam = problem.S, problem.W, problem.WWS, problem.R_norm, config.lam

    f = objective(S, W, Rn, U, H, lam)
    trace = [f]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        state = SolverState(U, H, it, f)
        inter = compute_intermediates(S, W, U, H, Rn, lam, WWS=WWS)
        U_prev = U
        U = update_u(state, inter, Rn, lam, config.eps_div, rule=config.u_rule)
        f_u = objective(S, W, Rn, U, H, lam)
        g = grad_h(S, W, U, H, WWS=WWS)
        last = {}

        def obj_h(Hc, U_fixed=U):
            last["H"], last["f"] = Hc, objective(S, W, Rn, U_fixed, Hc, lam)
            return last["f"]

        H, step = update_h(
            H, g, config.alpha, obj_h, config.backtracking, config.max_backtracks, current=f_u
        )
        if step == 0:
            f_new = f_u
        elif last.get("H") is H:
            f_new = last["f"]
        else:
            f_new = obj_h(H)
        if not np.isfinite(f_new):
            raise FloatingPointError(f"objective diverged at iteration {it}")
        if callback is not None:
            callback(SolverState(U, H, it, f_new), f_u, step)
        prev, f = f, f_new
        trace.append(f)
        if _relative_change(prev, f_u, f) < config.tol and (
            config.u_tol is None or np.abs(U - U_prev).max() < config.u_tol
        ):
            converged = True
            break
    return SolverResult(U=U, H=H, objective_trace=trace, converged=converged,
                        iterations_used=it, seed=seed)


def fit(S, R, config):
    """Fit memberships U and relations H; best of ``config.restarts`` starts.

    Restart ``r`` uses seed ``config.seed + r``. The lowest final objective wins.
    """
    if S.shape != R.shape or S.n_rows != S.n_cols:
        raise DimensionError(f"S {S.shape} and R {R.shape} must be square and equal")
    n = S.n_rows
    if n < config.k:
        raise ConfigurationError(f"n={n} users is fewer than k={config.k} communities")
    if R.nnz and R.data.min() < 0:
        raise ConfigurationError("interaction matrix has negative entries")
    zero = np.flatnonzero(degree_vector(R) == 0)
    if zero.size:
        raise ConfigurationError(
            f"{zero.size} user(s) have no interactions (first index {zero[0]}); "
            "run ingestion preprocessing to remove them"
        )
    problem = Problem.build(S, R)
    best = None
    failures = []
    for r in range(config.restarts):
        try:
            res = fit_once(problem, config, seed=config.seed + r)
        except FloatingPointError as e:
            log.warning("restart %d (seed %d) diverged: %s", r, config.seed + r, e)
            failures.append(e)
            continue
        log.debug("restart %d: objective %.6g after %d iters", r, res.objective, res.iterations_used)
        if best is None or res.objective < best.objective:
            best = res
    if best is None:
        raise FloatingPointError(
            f"all {config.restarts} restart(s) diverged; try a smaller alpha or larger lambda"
        )
    return best


def normalize_columns(U, H):
    """Scale U's columns to unit norm, compensating in H so U H U^T is unchanged."""
    norms = np.linalg.norm(U, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return U / safe, H * np.outer(safe, safe)


def with_config(config, **changes):
    return replace(config, **changes)
