"""Downhill-simplex search over measurement settings.

The inner linear program (see :mod:`lhvlp.lp`) gives the noise
threshold for fixed settings; the outer search moves the settings to
extremise that threshold.  The simplex method is the classic
reflect / expand / contract / shrink scheme with multi-restart, each
restart seeded independently so runs are reproducible per
(seed, restart index) no matter how restarts are scheduled.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import lp as _lp
from .quantum import multiport_prob_table

TWO_PI = 2.0 * math.pi

FAMILIES = (
    "qubit-coplanar",
    "qubit-spherical",
    "ghz3-coplanar",
    "qunit-multiport",
)

# Qubit-family results below this line indicate a broken inner LP, not
# an unusually good model: 1/sqrt(2) is the known floor.
QUBIT_FLOOR = 1.0 / math.sqrt(2.0) - 1e-6

__all__ = [
    "OptimizerConfig",
    "SimplexResult",
    "nelder_mead",
    "ThresholdReport",
    "optimize_threshold",
    "bell_submatrix_present",
    "FAMILIES",
]


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 30
    max_iter: int = 500
    tol: float = 1e-10
    seed: int = 0
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    threads: int | None = None   # None: LHVLP_THREADS env var, else 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if not self.expansion > 1.0 > self.contraction > 0.0:
            raise ValueError(
                "need expansion > 1 > contraction > 0, got "
                f"{self.expansion} / {self.contraction}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get("LHVLP_THREADS", "")
        try:
            return max(1, int(env))
        except ValueError:
            return 1


@dataclass
class SimplexResult:
    point: np.ndarray
    value: float
    iterations: int
    evaluations: int
    converged: bool
    trace: tuple   # best value after each iteration


def nelder_mead(objective, start, config: OptimizerConfig | None = None,
                initial_simplex: np.ndarray | None = None) -> SimplexResult:
    """Minimise ``objective`` from ``start`` with a downhill simplex.

    ``start`` becomes vertex 0; the remaining vertices come from
    ``initial_simplex`` or from nudging each coordinate by a fixed step.
    Terminates when the simplex diameter or the value spread drops below
    ``config.tol``, or at the iteration cap (best-so-far returned with
    ``converged`` False).  The result never exceeds the start value.
    """
    cfg = config or OptimizerConfig()
    x0 = np.asarray(start, dtype=float)
    dim = x0.shape[0]
    if dim < 1:
        raise ValueError("need at least one coordinate")

    if initial_simplex is None:
        simplex = np.tile(x0, (dim + 1, 1))
        for d in range(dim):
            simplex[d + 1, d] += 0.25
    else:
        simplex = np.array(initial_simplex, dtype=float)
        if simplex.shape != (dim + 1, dim):
            raise ValueError(
                f"initial simplex must be ({dim + 1}, {dim}), got {simplex.shape}")
        simplex[0] = x0

    values = np.array([objective(v) for v in simplex], dtype=float)
    n_eval = dim + 1
    trace = []
    converged = False

    rho, chi, gam, sig = (cfg.reflection, cfg.expansion,
                          cfg.contraction, cfg.shrink)
    it = 0
    for it in range(1, cfg.max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]

        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        spread = values[-1] - values[0]
        if diameter < cfg.tol or spread < cfg.tol:
            converged = True
            trace.append(values[0])
            break

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + rho * (centroid - simplex[-1])
        fr = objective(xr)
        n_eval += 1
        if fr < values[0]:
            xe = centroid + chi * (xr - centroid)
            fe = objective(xe)
            n_eval += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + gam * (xr - centroid)      # outside
            else:
                xc = centroid - gam * (centroid - simplex[-1])  # inside
            fc = objective(xc)
            n_eval += 1
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for v in range(1, dim + 1):
                    simplex[v] = simplex[0] + sig * (simplex[v] - simplex[0])
                    values[v] = objective(simplex[v])
                n_eval += dim
        trace.append(values.min())

    best = int(np.argmin(values))
    return SimplexResult(
        point=simplex[best].copy(),
        value=float(values[best]),
        iterations=it,
        evaluations=n_eval,
        converged=converged,
        trace=tuple(float(t) for t in trace),
    )


# ---------------------------------------------------------------------------
# Family-specific objectives.


def _qubit_coplanar_tensor(point: np.ndarray, counts: tuple) -> np.ndarray:
    n_a, n_b = counts
    a = point[:n_a]
    b = point[n_a:]
    return -np.cos(a[:, None] + b[None, :])


def _unit_vectors(par: np.ndarray) -> np.ndarray:
    theta = par[0::2]
    phi = par[1::2]
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)


def _qubit_spherical_tensor(point: np.ndarray, counts: tuple) -> np.ndarray:
    n_a, n_b = counts
    a = _unit_vectors(point[:2 * n_a])
    b = _unit_vectors(point[2 * n_a:])
    return -(a @ b.T)


def _ghz3_tensor(point: np.ndarray, counts: tuple) -> np.ndarray:
    n_a, n_b, n_c = counts
    a = point[:n_a]
    b = point[n_a:n_a + n_b]
    c = point[n_a + n_b:]
    return np.cos(a[:, None, None] + b[None, :, None] + c[None, None, :])


def _phase_vectors(point: np.ndarray, count: int, arity: int) -> np.ndarray:
    """Per-setting phase vectors with the first phase pinned at 0."""
    free = point.reshape(count, arity - 1)
    return np.concatenate([np.zeros((count, 1)), free], axis=1)


def _correlation_threshold(tensor: np.ndarray, arity: int = 2) -> float:
    prog = _lp.build_correlation_lp(tensor, arity=arity)
    sol = _lp.solve_lp(prog)
    if sol.status != "optimal":
        raise _lp.SolverError(
            f"inner correlation LP failed with status {sol.status!r}")
    return float(sol.value)


def _multiport_noise_threshold(point: np.ndarray, counts: tuple, arity: int) -> float:
    n_a, n_b = counts
    a_ph = _phase_vectors(point[:n_a * (arity - 1)], n_a, arity)
    b_ph = _phase_vectors(point[n_a * (arity - 1):], n_b, arity)
    tables = np.empty((n_a, n_b, arity, arity))
    for i in range(n_a):
        for j in range(n_b):
            tables[i, j] = multiport_prob_table(arity, [a_ph[i], b_ph[j]])
    prog = _lp.build_joint_lp(tables, arity)
    sol = _lp.solve_lp(prog)
    if sol.status != "optimal":
        raise _lp.SolverError(
            f"inner joint LP failed with status {sol.status!r}")
    return float(sol.value)


def _family_problem(family: str, counts: tuple, arity: int | None):
    """Returns (dimension, objective-to-minimise, threshold-from-objective)."""
    counts = tuple(int(c) for c in counts)
    if any(c < 1 for c in counts):
        raise ValueError(f"settings counts must be positive, got {counts}")

    if family == "qubit-coplanar":
        if len(counts) != 2:
            raise ValueError("qubit-coplanar expects (n_a, n_b) settings")
        dim = sum(counts)
        obj = lambda p: _correlation_threshold(_qubit_coplanar_tensor(p, counts))
        tensor = lambda p: _qubit_coplanar_tensor(p, counts)
        return dim, obj, tensor, 1.0
    if family == "qubit-spherical":
        if len(counts) != 2:
            raise ValueError("qubit-spherical expects (n_a, n_b) settings")
        dim = 2 * sum(counts)
        obj = lambda p: _correlation_threshold(_qubit_spherical_tensor(p, counts))
        tensor = lambda p: _qubit_spherical_tensor(p, counts)
        return dim, obj, tensor, 1.0
    if family == "ghz3-coplanar":
        if len(counts) != 3:
            raise ValueError("ghz3-coplanar expects (n_a, n_b, n_c) settings")
        dim = sum(counts)
        obj = lambda p: _correlation_threshold(_ghz3_tensor(p, counts))
        tensor = lambda p: _ghz3_tensor(p, counts)
        return dim, obj, tensor, 1.0
    if family == "qunit-multiport":
        if len(counts) != 2:
            raise ValueError("qunit-multiport expects (n_a, n_b) settings")
        if arity is None or arity < 2:
            raise ValueError("qunit-multiport needs an outcome arity >= 2")
        dim = (arity - 1) * sum(counts)
        # Noise thresholds are maximised over settings, so flip the sign.
        obj = lambda p: -_multiport_noise_threshold(p, counts, arity)
        tensor = None
        return dim, obj, tensor, -1.0
    raise ValueError(f"unknown family {family!r}; known: {FAMILIES}")


@dataclass
class ThresholdReport:
    family: str
    settings_counts: tuple
    arity: int | None
    threshold: float
    settings: np.ndarray
    quantum_tensor: np.ndarray | None
    bell_submatrix: bool | None
    restart_values: tuple
    best_restart: int
    converged_all: bool
    config: OptimizerConfig
    wall_time: float


def bell_submatrix_present(tensor: np.ndarray, tol: float = 1e-2) -> bool:
    """True if some 2x2 submatrix has all |entries| = 1/sqrt2 within tol
    and exactly one entry of deviating sign (four-entry product < 0)."""
    q = np.asarray(tensor)
    if q.ndim != 2 or q.shape[0] < 2 or q.shape[1] < 2:
        return False
    target = 1.0 / math.sqrt(2.0)
    rows, cols = q.shape
    for r1 in range(rows):
        for r2 in range(r1 + 1, rows):
            for c1 in range(cols):
                for c2 in range(c1 + 1, cols):
                    sub = q[np.ix_((r1, r2), (c1, c2))]
                    if np.max(np.abs(np.abs(sub) - target)) > tol:
                        continue
                    if np.prod(np.sign(sub)) < 0:
                        return True
    return False


def _single_restart(args):
    objective, dim, child_seed, cfg = args
    rng = np.random.default_rng(child_seed)
    simplex = rng.uniform(0.0, TWO_PI, size=(dim + 1, dim))
    return nelder_mead(objective, simplex[0], cfg, initial_simplex=simplex)


def optimize_threshold(family: str, settings_counts, config: OptimizerConfig | None = None,
                       arity: int | None = None) -> ThresholdReport:
    """Multi-restart simplex search for a family's extremal noise threshold.

    Qubit and GHZ families minimise the admissible visibility V over
    settings; the multiport family maximises the admissible noise
    fraction F.  Each restart draws its own initial simplex uniformly
    from [0, 2 pi) using a child seed spawned from ``config.seed``.
    """
    cfg = config or OptimizerConfig()
    dim, objective, tensor_fn, sign = _family_problem(family, tuple(settings_counts), arity)

    t0 = time.perf_counter()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    jobs = [(objective, dim, children[r], cfg) for r in range(cfg.restarts)]
    n_threads = cfg.resolved_threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(_single_restart, jobs))
    else:
        results = [_single_restart(j) for j in jobs]
    wall = time.perf_counter() - t0

    objective_values = [r.value for r in results]
    best_restart = int(np.argmin(objective_values))
    best = results[best_restart]
    threshold = sign * best.value

    quantum_tensor = tensor_fn(best.point) if tensor_fn is not None else None
    submatrix = (bell_submatrix_present(quantum_tensor)
                 if quantum_tensor is not None and quantum_tensor.ndim == 2
                 else None)

    if family.startswith("qubit") and threshold < QUBIT_FLOOR:
        raise RuntimeError(
            f"threshold {threshold} fell below the qubit floor "
            f"{QUBIT_FLOOR}; the inner LP is suspect")

    return ThresholdReport(
        family=family,
        settings_counts=tuple(int(c) for c in settings_counts),
        arity=arity,
        threshold=float(threshold),
        settings=best.point.copy(),
        quantum_tensor=quantum_tensor,
        bell_submatrix=submatrix,
        restart_values=tuple(sign * v for v in objective_values),
        best_restart=best_restart,
        converged_all=all(r.converged for r in results),
        config=cfg,
        wall_time=wall,
    )
