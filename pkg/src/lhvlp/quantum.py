"""Quantum predictions for interferometric Bell-type experiments.

Correlation functions and detection probabilities for:

* two qubits in a singlet-type state with a white-noise admixture,
* M-qubit GHZ states measured in coplanar settings,
* M maximally entangled quNits behind symmetric 2N-port beamsplitters
  with per-port phase shifters.

Outcomes of a 2N-port measurement carry complex unit values: a click
behind output port k is scored as the root of unity gamma^(k-1) with
gamma = exp(2 pi i / N).  For N = 2 this reduces to the usual +1/-1.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "two_qubit_corr",
    "two_qubit_probs",
    "ghz_corr",
    "ghz3_probs",
    "port_value",
    "port_values",
    "multiport_prob",
    "multiport_prob_table",
    "multiport_corr",
    "qutrit_group_probs",
    "qutrit_corr_from_groups",
]


def _check_fraction(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def _check_sign(name: str, value: int) -> int:
    if value not in (-1, 1):
        raise ValueError(f"{name} must be +1 or -1, got {value!r}")
    return int(value)


def two_qubit_corr(phi1: float, phi2: float, noise_fraction: float = 0.0) -> float:
    """Two-qubit correlation -(1 - F) cos(phi1 + phi2).

    ``noise_fraction`` F is the weight of the white-noise admixture;
    the interference fringe scales by 1 - F.
    """
    f = _check_fraction("noise_fraction", noise_fraction)
    return -(1.0 - f) * math.cos(phi1 + phi2)


def two_qubit_probs(m: int, mp: int, phi1: float, phi2: float,
                    visibility: float = 1.0) -> float:
    """Joint probability of local outcomes m, mp (each +1 or -1).

    Equals (1/4) (1 - V m m' cos(phi1 + phi2)) where V is the fringe
    visibility.  Summing m*m'*P over the four outcome pairs recovers
    ``two_qubit_corr`` with F = 1 - V.
    """
    m = _check_sign("m", m)
    mp = _check_sign("mp", mp)
    v = _check_fraction("visibility", visibility)
    return 0.25 * (1.0 - v * m * mp * math.cos(phi1 + phi2))


def ghz_corr(angles, visibility: float = 1.0) -> float:
    """M-party GHZ correlation V cos(sum of local angles), M >= 2."""
    angles = [float(a) for a in angles]
    if len(angles) < 2:
        raise ValueError("ghz_corr needs at least 2 parties")
    v = _check_fraction("visibility", visibility)
    return v * math.cos(math.fsum(angles))


def ghz3_probs(m: int, l: int, k: int, alpha: float, beta: float, gamma: float,
               visibility: float = 1.0) -> float:
    """Three-qubit coplanar outcome probability.

    (1/8) (1 + m l k V cos(alpha + beta + gamma)).  All one- and
    two-party marginals are flat (1/2 and 1/4) independent of settings.
    """
    m = _check_sign("m", m)
    l = _check_sign("l", l)
    k = _check_sign("k", k)
    v = _check_fraction("visibility", visibility)
    return 0.125 * (1.0 + m * l * k * v * math.cos(alpha + beta + gamma))


def port_value(arity: int, port: int) -> complex:
    """Complex unit value assigned to a click behind output ``port`` (1-based)."""
    if arity < 2:
        raise ValueError(f"arity must be >= 2, got {arity}")
    if not 1 <= port <= arity:
        raise ValueError(f"output port must lie in 1..{arity}, got {port}")
    return cmath.exp(2j * math.pi * (port - 1) / arity)


def port_values(arity: int) -> np.ndarray:
    """All N outcome values (gamma^0, ..., gamma^(N-1)) as a complex array."""
    if arity < 2:
        raise ValueError(f"arity must be >= 2, got {arity}")
    return np.exp(2j * np.pi * np.arange(arity) / arity)


def _check_phases(arity: int, phases) -> np.ndarray:
    ph = np.asarray(phases, dtype=float)
    if ph.ndim != 2 or ph.shape[1] != arity:
        raise ValueError(
            f"phases must be an (n_parties, {arity}) array of phase-shifter "
            f"settings, got shape {ph.shape}")
    if ph.shape[0] < 1:
        raise ValueError("at least one party is required")
    return ph


def multiport_prob(arity: int, phases, outputs, noise_fraction: float = 0.0) -> float:
    """Probability of one detection pattern behind M symmetric 2N-ports.

    ``phases[l][m]`` is the phase shifter in front of input m of device l
    (N entries per device); ``outputs`` gives the firing output port per
    device, 1-based.  ``noise_fraction`` F admixes white noise: the
    returned value is F/N^M + (1 - F) * pure.
    """
    ph = _check_phases(arity, phases)
    n_parties = ph.shape[0]
    ks = np.asarray(outputs, dtype=int)
    if ks.shape != (n_parties,):
        raise ValueError(
            f"outputs must give one port per party, expected {n_parties}, "
            f"got shape {ks.shape}")
    if np.any(ks < 1) or np.any(ks > arity):
        raise ValueError(f"output ports must lie in 1..{arity}, got {outputs!r}")
    f = _check_fraction("noise_fraction", noise_fraction)

    # Amplitude: sum over the N source components m, each picking up the
    # total shifter phase plus gamma^(m * sum(k-1)) from the couplers.
    m = np.arange(arity)
    total = ph.sum(axis=0)
    s = int((ks - 1).sum())
    amp = np.exp(1j * (total + TWO_PI * m * s / arity)).sum()
    pure = abs(amp) ** 2 / arity ** (n_parties + 1)
    return f / arity ** n_parties + (1.0 - f) * pure


def multiport_prob_table(arity: int, phases, noise_fraction: float = 0.0) -> np.ndarray:
    """Full table of detection probabilities, shape (N,) * n_parties.

    Entry [k1-1, ..., kM-1] is ``multiport_prob`` at outputs (k1..kM).
    The pure probability depends on the outputs only through the residue
    of sum(k - 1) mod N, which keeps this cheap for any M.
    """
    ph = _check_phases(arity, phases)
    n_parties = ph.shape[0]
    f = _check_fraction("noise_fraction", noise_fraction)

    m = np.arange(arity)
    total = ph.sum(axis=0)
    by_residue = np.empty(arity)
    for s in range(arity):
        amp = np.exp(1j * (total + TWO_PI * m * s / arity)).sum()
        by_residue[s] = abs(amp) ** 2 / arity ** (n_parties + 1)

    grids = np.meshgrid(*([np.arange(arity)] * n_parties), indexing="ij")
    residues = sum(grids) % arity
    return f / arity ** n_parties + (1.0 - f) * by_residue[residues]


def multiport_corr(arity: int, phases) -> complex:
    """Average product of port values over M devices (complex, |E| <= 1).

    Closed form (1/N) sum_m exp(i sum_l (phases[l][m] - phases[l][m+1]))
    with the cyclic wrap m+1 -> 1.  Equals the port-value-weighted sum of
    ``multiport_prob_table`` at zero noise.
    """
    ph = _check_phases(arity, phases)
    diffs = ph - np.roll(ph, -1, axis=1)
    return complex(np.exp(1j * diffs.sum(axis=0)).sum() / arity)


def qutrit_group_probs(corr: complex, noise_fraction: float = 0.0,
                       tol: float = 1e-9) -> tuple[float, float, float]:
    """Residue-class probabilities of a two-qutrit measurement.

    The nine outcome pairs (k, l) split into three groups of constant
    probability by the residue of k + l - 2 mod 3; each group probability
    is a linear function of the complex pair correlation:

        P1 = 1/9 + (2/9) Re E        (residue 1)
        P2 = 1/9 - (sqrt3 Im E + Re E)/9   (residue 0)
        P3 = 1/9 + (sqrt3 Im E - Re E)/9   (residue 2)

    ``noise_fraction`` scales E by (1 - F) first.  Inputs that would
    produce a probability below -tol are rejected as non-physical.
    """
    f = _check_fraction("noise_fraction", noise_fraction)
    e = (1.0 - f) * complex(corr)
    r3 = math.sqrt(3.0)
    p1 = 1.0 / 9.0 + 2.0 * e.real / 9.0
    p2 = 1.0 / 9.0 - (r3 * e.imag + e.real) / 9.0
    p3 = 1.0 / 9.0 + (r3 * e.imag - e.real) / 9.0
    low = min(p1, p2, p3)
    if low < -tol:
        raise ValueError(
            f"correlation {corr!r} is not realisable: group probability {low}")
    return (p1, p2, p3)


def qutrit_corr_from_groups(p1: float, p2: float, p3: float) -> complex:
    """Inverse of ``qutrit_group_probs`` at zero noise.

    E = 3 (P1 + a^2 P2 + a P3) with a = exp(2 pi i / 3).
    """
    a = port_value(3, 2)
    return 3.0 * (p1 + a * a * p2 + a * p3)
