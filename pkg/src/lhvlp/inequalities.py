"""Norm-based multi-party inequalities and the whole-sphere comparison.

The grid construction compares the squared norm of the quantum
correlation restricted to a fixed 3^M grid of coplanar settings with
the best scalar product any local deterministic assignment can reach on
that grid.  Closed forms are provided with brute-force checks in the
test suite; thresholds for imperfect visibility and detection
efficiency follow from the same scalar-product bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT3 = math.sqrt(3.0)

__all__ = [
    "chsh",
    "grid_settings",
    "grid_correlations",
    "grid_norm_sq",
    "grid_strategy_max",
    "grid_correlation_sum",
    "GridComparison",
    "grid_comparison",
    "grid_visibility_threshold",
    "grid_efficiency_threshold",
    "FunctionalComparison",
    "functional_inequality",
    "functional_norm_mc",
]


def chsh(correlations) -> float:
    """Four-term combination E1 + E2 + E3 - E4.

    The arguments are correlations at the settings pairs
    (a, b), (a', b), (a, b') and (a', b') in that order.
    """
    e = [float(v) for v in correlations]
    if len(e) != 4:
        raise ValueError(f"chsh needs exactly 4 correlations, got {len(e)}")
    return e[0] + e[1] + e[2] - e[3]


def _check_parties(n_parties: int) -> int:
    n = int(n_parties)
    if n < 2:
        raise ValueError(f"need at least 2 parties, got {n_parties}")
    return n


def grid_settings(n_parties: int) -> list[tuple[float, ...]]:
    """Three coplanar settings per party.

    The first party measures at (pi/6, pi/2, 5 pi/6), every other party
    at (0, pi/3, 2 pi/3).
    """
    n = _check_parties(n_parties)
    first = (math.pi / 6, math.pi / 2, 5 * math.pi / 6)
    rest = (0.0, math.pi / 3, 2 * math.pi / 3)
    return [first] + [rest] * (n - 1)


def grid_correlations(n_parties: int) -> np.ndarray:
    """Correlation tensor cos(sum of angles) over the grid, shape (3,)*M."""
    n = _check_parties(n_parties)
    grids = np.meshgrid(*[np.asarray(s) for s in grid_settings(n)], indexing="ij")
    return np.cos(sum(grids))


def grid_norm_sq(n_parties: int) -> float:
    """Squared grid norm of the correlation tensor; equals 3^M / 2."""
    q = grid_correlations(n_parties)
    return float((q * q).sum())


def grid_strategy_max(n_parties: int, sample: int | None = None,
                      seed: int = 0) -> float:
    """Best scalar product between the grid tensor and a product sign tensor.

    Exhausts all (2^3)^M sign assignments for small M; with ``sample``
    set, evaluates that many random assignments instead (a lower bound).
    """
    n = _check_parties(n_parties)
    q = grid_correlations(n_parties)
    signs = np.array([[1 - 2 * ((s >> b) & 1) for b in range(3)]
                      for s in range(8)], dtype=float)
    rng = np.random.default_rng(seed)

    if sample is None:
        if n > 6:
            raise ValueError("exhaustive search beyond 6 parties is too large; "
                             "pass sample=")
        best = -np.inf
        idx = np.zeros(n, dtype=int)
        # iterate over all 8^M combinations with an odometer
        total = 8 ** n
        for flat in range(total):
            k = flat
            vecs = []
            for _ in range(n):
                vecs.append(signs[k % 8])
                k //= 8
            t = q
            for d, v in enumerate(vecs):
                t = np.tensordot(t, v, axes=([0], [0]))
            best = max(best, float(t))
        return best
    best = -np.inf
    for _ in range(int(sample)):
        vecs = [signs[rng.integers(8)] for _ in range(n)]
        t = q
        for v in vecs:
            t = np.tensordot(t, v, axes=([0], [0]))
        best = max(best, float(t))
    return best


def grid_correlation_sum(n_parties: int) -> float:
    """Plain sum of the grid correlation tensor: -2^M sin((M-1) pi / 3).

    This is the scalar product of the tensor with the all-ones
    assignment, the one a model reaches when every non-detection is
    scored as the same fixed value.
    """
    n = _check_parties(n_parties)
    return -(2.0 ** n) * math.sin((n - 1) * math.pi / 3.0)


@dataclass(frozen=True)
class GridComparison:
    lhv_bound: float       # best local scalar product: 2^(M-1) sqrt3
    quantum: float         # squared norm: 3^M / 2
    violation_ratio: float # quantum / bound = (3/2)^M / sqrt3


def grid_comparison(n_parties: int) -> GridComparison:
    """Closed-form bound, quantum norm and their ratio for M parties."""
    n = _check_parties(n_parties)
    bound = 2.0 ** (n - 1) * SQRT3
    quantum = 3.0 ** n / 2.0
    return GridComparison(
        lhv_bound=bound,
        quantum=quantum,
        violation_ratio=quantum / bound,
    )


def grid_visibility_threshold(n_parties: int) -> float:
    """Visibility beyond which no local model fits the grid: sqrt3 (2/3)^M."""
    n = _check_parties(n_parties)
    return SQRT3 * (2.0 / 3.0) ** n


def grid_efficiency_threshold(n_parties: int, tol: float = 1e-10) -> float:
    """Detection efficiency above which the grid admits no local model.

    Root of  eta^M (3^M / 2) = 2^(M-1) sqrt3 - |grid sum| (1 - eta)^M
    at unit visibility, with non-detections all scored alike.  Bisection
    on [1e-6, 1 - 1e-6]; raises if no sign change brackets a root.
    """
    n = _check_parties(n_parties)
    cmp = grid_comparison(n)
    qsum = abs(grid_correlation_sum(n))

    def gap(eta: float) -> float:
        return (eta ** n * cmp.quantum
                - cmp.lhv_bound + qsum * (1.0 - eta) ** n)

    lo, hi = 1e-6, 1.0 - 1e-6
    glo, ghi = gap(lo), gap(hi)
    if glo > 0 or ghi < 0:
        raise ValueError(
            f"no efficiency threshold in (0, 1) for {n} parties "
            f"(gap endpoints {glo}, {ghi})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FunctionalComparison:
    lhs: float       # squared norm of the noisy correlation over the sphere
    rhs: float       # bound on the overlap with any local model
    violated: bool   # True when lhs exceeds rhs, i.e. V > 3/4


def functional_inequality(visibility: float) -> FunctionalComparison:
    """Whole-sphere norm comparison for the two-qubit singlet fringe.

    lhs = (2 pi)^2 (1 + V^2/3) is the squared norm of the noisy quantum
    correlation over all setting directions; rhs = (2 pi)^2 (1 + V/4)
    bounds its overlap with any local model.  Violation (lhs > rhs) is
    equivalent to V > 3/4; at V = 3/4 the two sides are equal.
    """
    v = float(visibility)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility!r}")
    base = (2.0 * math.pi) ** 2
    lhs = base * (1.0 + v * v / 3.0)
    rhs = base * (1.0 + v / 4.0)
    return FunctionalComparison(lhs=lhs, rhs=rhs, violated=lhs > rhs)


def functional_norm_mc(visibility: float, n_samples: int = 200_000,
                       seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate (value, stderr) of the sphere-norm integral.

    Samples pairs of independent uniform directions; the integrand summed
    over the four outcome pairs is (1 + V^2 (a . b)^2) / 4 times the
    total solid angle squared.
    """
    v = float(visibility)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_samples, 3))
    b = rng.normal(size=(n_samples, 3))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    c = (a * b).sum(axis=1)
    area_sq = (4.0 * math.pi) ** 2
    samples = area_sq * (1.0 + v * v * c * c) / 4.0
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(n_samples))
    return mean, stderr
