"""Deterministic local-response catalogs and joint outcome distributions.

A strategy fixes one outcome per local setting.  For a 2N-port observer
the outcome alphabet is the N complex unit values; for N = 2 plain
+1/-1.  The catalogs below are the vertex sets of the local polytope
that the linear programs in :mod:`lhvlp.lp` optimise over.

Reduction: products of two (or three) strategies are invariant under
multiplying one observer's outcomes by a constant unit value and
another's by its inverse, so one observer per reduction step can be
restricted to strategies whose first-setting outcome is the identity.
That keeps every achievable product tensor while dividing the catalog
by N per reduced observer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import port_values

__all__ = [
    "ResourceLimitError",
    "Strategy",
    "StrategySpace",
    "enumerate_qubit_strategies",
    "enumerate_qunit_strategies",
    "strategy_product",
    "LocalModel",
    "joint_to_marginals",
    "lhv_from_joint",
    "joint_from_lhv",
]

# Largest permitted catalog (rows of the outcome table).  2^21 rows keeps
# the most ambitious supported qubit problems (about 20 settings on one
# side) within a few tens of MB.
MAX_STRATEGY_ROWS = 1 << 21


class ResourceLimitError(RuntimeError):
    """Raised when an enumeration would exceed the catalog size limit."""


@dataclass(frozen=True)
class Strategy:
    """One deterministic response function: ``values[i]`` answers setting i."""

    arity: int
    values: tuple

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StrategySpace:
    """Catalog of all deterministic responses of one observer.

    ``arity`` N is the outcome-alphabet size, ``n_settings`` the number
    of local settings.  With ``reduced`` the first-setting outcome is
    pinned to the identity value and the catalog holds one
    representative per global-value orbit (N^(n-1) entries instead of
    N^n).  Strategy j of a reduced space equals strategy N*j of the full
    one.
    """

    arity: int
    n_settings: int
    reduced: bool = False

    def __post_init__(self):
        if self.arity < 2:
            raise ValueError(f"arity must be >= 2, got {self.arity}")
        if self.n_settings < 1:
            raise ValueError(
                f"need at least one setting, got {self.n_settings}")
        rows = self.arity ** self.n_settings
        if rows > MAX_STRATEGY_ROWS:
            approx = rows * self.n_settings * 16
            raise ResourceLimitError(
                f"{self.n_settings} settings over a {self.arity}-value alphabet "
                f"needs {rows} strategies (about {approx / 1e6:.0f} MB); "
                f"the limit is {MAX_STRATEGY_ROWS} rows")

    @property
    def count(self) -> int:
        free = self.n_settings - (1 if self.reduced else 0)
        return self.arity ** free

    def digits(self) -> np.ndarray:
        """Outcome digits 0..N-1, shape (count, n_settings), little-endian.

        Digit d of full-space strategy k is (k // N^d) mod N; a reduced
        space pins digit 0 to zero.
        """
        n, width = self.arity, self.n_settings
        k = np.arange(self.count)
        if self.reduced:
            cols = [np.zeros_like(k)]
            cols += [(k // n ** d) % n for d in range(width - 1)]
        else:
            cols = [(k // n ** d) % n for d in range(width)]
        return np.stack(cols, axis=1)

    def outcome_table(self) -> np.ndarray:
        """Outcome values, shape (count, n_settings).

        Real +-1 (float) for arity 2, complex unit values otherwise.
        """
        d = self.digits()
        if self.arity == 2:
            return 1.0 - 2.0 * d.astype(float)
        return port_values(self.arity)[d]

    def strategy(self, index: int) -> Strategy:
        """The ``index``-th catalog entry as a :class:`Strategy`."""
        if not 0 <= index < self.count:
            raise IndexError(
                f"strategy index {index} outside 0..{self.count - 1}")
        row = self.outcome_table()[index]
        return Strategy(self.arity, tuple(row.tolist()))


def enumerate_qubit_strategies(n_settings: int, reduce: bool = False) -> StrategySpace:
    """All +-1 response functions over ``n_settings`` settings.

    With ``reduce`` the first-setting outcome is pinned to +1, e.g. for
    two settings the catalog is {(+1,+1), (+1,-1)}.
    """
    return StrategySpace(2, n_settings, reduce)


def enumerate_qunit_strategies(arity: int, n_settings: int,
                               reduce: bool = False) -> StrategySpace:
    """All response functions over the N complex unit values."""
    return StrategySpace(arity, n_settings, reduce)


def strategy_product(a: Strategy, b: Strategy) -> np.ndarray:
    """Rank-one product matrix M[i, j] = a.values[i] * b.values[j].

    Both strategies must use the same outcome alphabet.
    """
    if a.arity != b.arity:
        raise ValueError(
            f"outcome alphabets differ: {a.arity} vs {b.arity}")
    av = np.asarray(a.values)
    bv = np.asarray(b.values)
    return np.outer(av, bv)


# ---------------------------------------------------------------------------
# Joint outcome distributions over all settings at once.
#
# A single table assigning a probability to every simultaneous outcome
# assignment (one outcome per setting of both observers) is equivalent
# to a local deterministic mixture; the converters below realise both
# directions of that equivalence.


@dataclass
class LocalModel:
    """Mixture of local response functions for two observers.

    ``weights[t]`` is the probability of hidden state t.  The response
    arrays give, per hidden state and per setting, a distribution over
    the N outcomes (deterministic models hold one-hot rows).
    """

    arity: int
    weights: np.ndarray        # (n_states,)
    responses_a: np.ndarray    # (n_states, n_a, N)
    responses_b: np.ndarray    # (n_states, n_b, N)

    def settings_counts(self) -> tuple[int, int]:
        return self.responses_a.shape[1], self.responses_b.shape[1]

    def pair_table(self, i: int, j: int) -> np.ndarray:
        """Outcome distribution (N x N) for the settings pair (i, j)."""
        ra = self.responses_a[:, i, :]
        rb = self.responses_b[:, j, :]
        return np.einsum("t,tk,tl->kl", self.weights, ra, rb)


def _check_joint(table: np.ndarray, n_a: int) -> tuple[np.ndarray, int]:
    table = np.asarray(table, dtype=float)
    if table.ndim < 2 or n_a < 1 or n_a >= table.ndim:
        raise ValueError(
            "joint table must have one axis per setting of both observers "
            f"with 1 <= n_a < ndim, got ndim={table.ndim}, n_a={n_a}")
    arity = table.shape[0]
    if any(s != arity for s in table.shape):
        raise ValueError(f"all axes must have equal length, got {table.shape}")
    if np.any(table < 0):
        raise ValueError("joint table has negative entries")
    if abs(table.sum() - 1.0) > 1e-9:
        raise ValueError(f"joint table sums to {table.sum()}, expected 1")
    return table, arity


def joint_to_marginals(table, n_a: int, i: int, j: int) -> np.ndarray:
    """Two-observable marginal (N x N) of a joint outcome table.

    ``table`` has one axis per setting (A settings first); the result is
    the distribution of (outcome at A-setting i, outcome at B-setting j).
    """
    table, _ = _check_joint(table, n_a)
    n_b = table.ndim - n_a
    if not 0 <= i < n_a:
        raise ValueError(f"A-setting {i} outside 0..{n_a - 1}")
    if not 0 <= j < n_b:
        raise ValueError(f"B-setting {j} outside 0..{n_b - 1}")
    keep = (i, n_a + j)
    axes = tuple(ax for ax in range(table.ndim) if ax not in keep)
    return table.sum(axis=axes)


def lhv_from_joint(table, n_a: int) -> LocalModel:
    """Local deterministic mixture realising a joint outcome table.

    Hidden states are the outcome assignments themselves; each state
    answers setting i with its fixed outcome (one-hot responses), with
    weight equal to the table entry.
    """
    table, arity = _check_joint(table, n_a)
    n_b = table.ndim - n_a
    n_states = table.size
    digits = np.stack(np.unravel_index(np.arange(n_states), table.shape), axis=1)
    eye = np.eye(arity)
    responses_a = eye[digits[:, :n_a]]
    responses_b = eye[digits[:, n_a:]]
    return LocalModel(
        arity=arity,
        weights=table.reshape(-1).copy(),
        responses_a=responses_a,
        responses_b=responses_b,
    )


def joint_from_lhv(model: LocalModel) -> np.ndarray:
    """Joint outcome table generated by a local mixture.

    Requires normalised weights and response rows; deterministic models
    round-trip ``lhv_from_joint`` exactly.
    """
    w = np.asarray(model.weights, dtype=float)
    ra = np.asarray(model.responses_a, dtype=float)
    rb = np.asarray(model.responses_b, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    for name, r in (("responses_a", ra), ("responses_b", rb)):
        if r.ndim != 3 or r.shape[0] != w.shape[0] or r.shape[2] != model.arity:
            raise ValueError(f"{name} must have shape (n_states, n_settings, N)")
        if np.any(r < 0) or np.max(np.abs(r.sum(axis=2) - 1.0)) > 1e-9:
            raise ValueError(f"{name} rows must be outcome distributions")

    n_a, n_b = ra.shape[1], rb.shape[1]
    shape = (model.arity,) * (n_a + n_b)
    table = np.zeros(shape)
    for t in range(w.shape[0]):
        factors = [ra[t, i] for i in range(n_a)] + [rb[t, j] for j in range(n_b)]
        block = factors[0]
        for f in factors[1:]:
            block = np.multiply.outer(block, f)
        table += w[t] * block
    return table
