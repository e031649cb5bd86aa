"""Linear programs deciding how much noise a local model needs.

Two formulations:

* correlation form: find the largest V such that V times a target
  correlation tensor is a convex mixture of deterministic strategy
  products (one column per strategy combination, one row per settings
  tuple, complex targets split into real and imaginary rows);

* joint form: find the smallest white-noise fraction F such that the
  noisy two-observer probability tables F/N^2 + (1 - F) * pure are the
  marginals of a single joint distribution over all settings at once.

Solved with scipy's HiGHS backend.  A basis-enumeration oracle is
provided for certifying small instances exhaustively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .strategies import StrategySpace

__all__ = [
    "SolverError",
    "LinearProgram",
    "LPSolution",
    "build_correlation_lp",
    "build_joint_lp",
    "solve_lp",
    "ModelTerm",
    "ModelReport",
    "extract_model",
    "AnalysisReport",
    "analyze_measured_tensor",
    "brute_force_lp_optimum",
]


class SolverError(RuntimeError):
    """LP backend failed to return a usable optimum."""


@dataclass
class LinearProgram:
    """Equality-constrained LP over box-bounded variables.

    Optimise ``objective @ x`` in the direction of ``sense`` subject to
    ``a_eq @ x = b_eq`` and ``lower <= x <= upper``.
    """

    sense: str                 # "max" or "min"
    objective: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray          # np.inf where unbounded
    meta: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclass
class LPSolution:
    """Solver outcome: ``status`` is optimal, infeasible or numerical-failure."""

    status: str
    value: float | None
    x: np.ndarray | None
    residual: float | None


def _product_columns(spaces: list[StrategySpace], shape: tuple[int, ...]) -> np.ndarray:
    """Matrix of strategy-product tensors, (n_tuples, n_combinations).

    Row order follows C-order enumeration of the settings tuples, column
    order C-order enumeration of the per-observer strategy indices.
    """
    tables = [s.outcome_table() for s in spaces]
    col_letters = "abcd"
    row_letters = "ijkl"
    n = len(spaces)
    operands = ",".join(col_letters[o] + row_letters[o] for o in range(n))
    out = row_letters[:n] + col_letters[:n]
    prod = np.einsum(f"{operands}->{out}", *tables)
    n_rows = int(np.prod(shape))
    n_cols = int(np.prod([s.count for s in spaces]))
    return prod.reshape(n_rows, n_cols)


def build_correlation_lp(target, arity: int = 2, reduce: bool = True) -> LinearProgram:
    """Correlation-form LP for a target tensor of any observer count.

    ``target`` has one axis per observer (settings counts as shape).
    Unknowns are the strategy-combination weights plus the scale V;
    constraints demand mixture = V * target per settings tuple together
    with normalisation, and V is capped at 1.  With ``reduce`` every
    observer after the first uses the pinned-first-outcome catalog.
    """
    q = np.asarray(target)
    if q.ndim < 2 or q.ndim > 4:
        raise ValueError(f"target must have 2..4 observer axes, got {q.ndim}")
    spaces = [
        StrategySpace(arity, n, reduce and (o > 0))
        for o, n in enumerate(q.shape)
    ]
    prods = _product_columns(spaces, q.shape)
    n_cols = prods.shape[1]
    q_flat = q.reshape(-1)

    is_complex = np.iscomplexobj(prods) or np.iscomplexobj(q_flat)
    if is_complex:
        n_rows = 2 * prods.shape[0]
        a = np.empty((n_rows + 1, n_cols + 1))
        a[0:n_rows:2, :n_cols] = prods.real
        a[1:n_rows:2, :n_cols] = prods.imag
        a[0:n_rows:2, n_cols] = -q_flat.real
        a[1:n_rows:2, n_cols] = -q_flat.imag
    else:
        n_rows = prods.shape[0]
        a = np.empty((n_rows + 1, n_cols + 1))
        a[:n_rows, :n_cols] = prods
        a[:n_rows, n_cols] = -q_flat.real
    a[n_rows, :n_cols] = 1.0
    a[n_rows, n_cols] = 0.0
    b = np.zeros(n_rows + 1)
    b[n_rows] = 1.0

    objective = np.zeros(n_cols + 1)
    objective[n_cols] = 1.0
    lower = np.zeros(n_cols + 1)
    upper = np.full(n_cols + 1, np.inf)
    upper[n_cols] = 1.0
    return LinearProgram(
        sense="max",
        objective=objective,
        a_eq=a,
        b_eq=b,
        lower=lower,
        upper=upper,
        meta={
            "kind": "correlation",
            "arity": arity,
            "spaces": tuple(spaces),
            "target": q.copy(),
        },
    )


def build_joint_lp(pure_tables, arity: int) -> LinearProgram:
    """Joint-form LP: minimise the white-noise fraction F.

    ``pure_tables[i, j]`` is the noiseless N x N outcome table for the
    settings pair (i, j).  Unknowns are the entries of one distribution
    over simultaneous outcomes of all settings plus F; each marginal
    entry must equal F/N^2 + (1 - F) * pure.  The normalisation of the
    joint distribution is implied by any settings pair's rows.
    """
    t = np.asarray(pure_tables, dtype=float)
    n = arity
    if t.ndim != 4 or t.shape[2] != n or t.shape[3] != n:
        raise ValueError(
            f"pure_tables must have shape (n_a, n_b, {n}, {n}), got {t.shape}")
    slice_sums = t.sum(axis=(2, 3))
    if np.max(np.abs(slice_sums - 1.0)) > 1e-9:
        raise ValueError("every settings pair's table must sum to 1")
    if t.min() < -1e-12:
        raise ValueError("pure tables must be nonnegative")

    n_a, n_b = t.shape[0], t.shape[1]
    n_joint = n ** (n_a + n_b)
    digits = np.stack(
        np.unravel_index(np.arange(n_joint), (n,) * (n_a + n_b)), axis=1)

    n_rows = n_a * n_b * n * n
    a = np.zeros((n_rows, n_joint + 1))
    b = np.empty(n_rows)
    row = 0
    for i in range(n_a):
        for j in range(n_b):
            for k in range(n):
                mask_a = digits[:, i] == k
                for l in range(n):
                    mask = mask_a & (digits[:, n_a + j] == l)
                    a[row, :n_joint] = mask
                    a[row, n_joint] = t[i, j, k, l] - 1.0 / n ** 2
                    b[row] = t[i, j, k, l]
                    row += 1

    objective = np.zeros(n_joint + 1)
    objective[n_joint] = 1.0
    lower = np.zeros(n_joint + 1)
    upper = np.full(n_joint + 1, np.inf)
    upper[n_joint] = 1.0
    return LinearProgram(
        sense="min",
        objective=objective,
        a_eq=a,
        b_eq=b,
        lower=lower,
        upper=upper,
        meta={
            "kind": "joint",
            "arity": n,
            "settings_counts": (n_a, n_b),
            "pure_tables": t.copy(),
        },
    )


def solve_lp(lp: LinearProgram, tol: float = 1e-6) -> LPSolution:
    """Solve with HiGHS; statuses optimal / infeasible / numerical-failure."""
    c = lp.objective if lp.sense == "min" else -lp.objective
    bounds = [
        (lo, None if math.isinf(hi) else hi)
        for lo, hi in zip(lp.lower, lp.upper)
    ]
    res = linprog(c, A_eq=lp.a_eq, b_eq=lp.b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        return LPSolution(status="infeasible", value=None, x=None, residual=None)
    if res.status != 0 or res.x is None:
        return LPSolution(status="numerical-failure", value=None, x=None,
                          residual=None)
    x = np.asarray(res.x)
    residual = float(np.max(np.abs(lp.a_eq @ x - lp.b_eq)))
    if residual > max(tol, 1e-7):
        return LPSolution(status="numerical-failure", value=None, x=x,
                          residual=residual)
    value = float(lp.objective @ x)
    return LPSolution(status="optimal", value=value, x=x, residual=residual)


@dataclass(frozen=True)
class ModelTerm:
    """One mixture component: per-observer outcome tuples and its weight."""

    outcomes: tuple
    weight: float


@dataclass
class ModelReport:
    """Explicit mixture extracted from a correlation-LP solution."""

    threshold: float
    terms: tuple
    tensor: np.ndarray
    max_error: float


def extract_model(lp: LinearProgram, sol: LPSolution,
                  weight_floor: float = 1e-7) -> ModelReport:
    """Decode the mixture behind an optimal correlation-LP solution.

    Weights below ``weight_floor`` are dropped.  The reproduced tensor is
    rebuilt from the decoded outcome values, not from the LP matrix, and
    compared against threshold * target.
    """
    if lp.meta.get("kind") != "correlation":
        raise ValueError("extract_model expects a correlation-form program")
    if sol.status != "optimal" or sol.x is None:
        raise SolverError(f"cannot extract a model from status {sol.status!r}")

    spaces = lp.meta["spaces"]
    target = lp.meta["target"]
    counts = tuple(s.count for s in spaces)
    tables = [s.outcome_table() for s in spaces]
    weights = sol.x[:-1]
    threshold = float(sol.x[-1])

    keep = np.nonzero(weights > weight_floor)[0]
    terms = []
    tensor = np.zeros(target.shape,
                      dtype=complex if any(np.iscomplexobj(t) for t in tables)
                      else float)
    for col in keep:
        idx = np.unravel_index(col, counts)
        rows = [tables[o][idx[o]] for o in range(len(spaces))]
        block = rows[0]
        for r in rows[1:]:
            block = np.multiply.outer(block, r)
        w = float(weights[col])
        tensor = tensor + w * block
        terms.append(ModelTerm(
            outcomes=tuple(tuple(r.tolist()) for r in rows),
            weight=w,
        ))
    max_error = float(np.max(np.abs(tensor - threshold * target)))
    return ModelReport(
        threshold=threshold,
        terms=tuple(terms),
        tensor=tensor,
        max_error=max_error,
    )


@dataclass
class AnalysisReport:
    """Largest admissible scale for a measured correlation tensor."""

    factor: float
    compatible: bool
    model: ModelReport
    residual: float


def analyze_measured_tensor(measured, tol: float = 1e-9) -> AnalysisReport:
    """Largest s in [0, 1] with s * measured expressible as a local mixture.

    Entries must lie in [-1, 1] up to ``tol``.  A factor of 1 (within
    1e-6) marks the tensor as compatible with a local model at full
    strength.
    """
    q = np.asarray(measured, dtype=float)
    if q.ndim != 2:
        raise ValueError(f"measured tensor must be a matrix, got ndim {q.ndim}")
    worst = float(np.max(np.abs(q)))
    if worst > 1.0 + tol:
        raise ValueError(
            f"correlation entries must lie in [-1, 1], largest magnitude {worst}")
    q = np.clip(q, -1.0, 1.0)
    lp = build_correlation_lp(q, arity=2, reduce=True)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverError(f"analysis LP ended with status {sol.status!r}")
    model = extract_model(lp, sol)
    factor = float(sol.value)
    return AnalysisReport(
        factor=factor,
        compatible=factor >= 1.0 - 1e-6,
        model=model,
        residual=float(sol.residual),
    )


def brute_force_lp_optimum(lp: LinearProgram, det_tol: float = 1e-12,
                           feas_tol: float = 1e-9,
                           chunk: int = 100_000) -> float:
    """Exhaustive basic-solution optimum of a small LP.

    Finite upper bounds are turned into slack rows, then every basis of
    the equality system is solved in batches; the best feasible basic
    solution is returned.  Intended as an independent oracle for the
    simplex backend on instances with a modest variable count.
    """
    if np.any(lp.lower != 0):
        raise ValueError("oracle expects all lower bounds at 0")
    m, n = lp.a_eq.shape
    bounded = np.nonzero(np.isfinite(lp.upper))[0]
    n_slack = bounded.shape[0]
    a = np.zeros((m + n_slack, n + n_slack))
    a[:m, :n] = lp.a_eq
    b = np.concatenate([lp.b_eq, lp.upper[bounded]])
    for extra, var in enumerate(bounded):
        a[m + extra, var] = 1.0
        a[m + extra, n + extra] = 1.0
    c = np.concatenate([lp.objective, np.zeros(n_slack)])

    n_rows = m + n_slack
    n_cols = n + n_slack
    if n_cols < n_rows:
        raise ValueError("system has more rows than columns")
    best = None
    combos = itertools.combinations(range(n_cols), n_rows)
    while True:
        batch = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if batch.size == 0:
            break
        sub = a[:, batch]                      # (n_rows, n_batch, n_rows)
        sub = np.moveaxis(sub, 1, 0)           # (n_batch, n_rows, n_rows)
        dets = np.linalg.det(sub)
        ok = np.abs(dets) > det_tol
        if not np.any(ok):
            continue
        sols = np.linalg.solve(sub[ok], np.broadcast_to(b, (int(ok.sum()), n_rows)))
        feasible = np.all(sols >= -feas_tol, axis=1)
        if not np.any(feasible):
            continue
        vals = (sols[feasible] * c[batch[ok][feasible]]).sum(axis=1)
        cand = vals.max() if lp.sense == "max" else vals.min()
        if best is None:
            best = cand
        else:
            best = max(best, cand) if lp.sense == "max" else min(best, cand)
    if best is None:
        raise SolverError("no feasible basic solution found")
    return float(best)
