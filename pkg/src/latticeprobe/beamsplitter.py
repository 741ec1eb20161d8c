"""Two-site beam-splitter dynamics and the pair-loss measurement stage.

One column couples a site in each row; with two internal species that is
four bosonic modes (a_I, b_I, a_II, b_II) holding exactly two atoms, a
10-state Fock space small enough to treat exactly.  Hopping and on-site
interaction energies use hbar = 1 units, so times are inverse energies;
loss-stage time constants are in milliseconds and independent of them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

MODES = ("a_I", "b_I", "a_II", "b_II")

# All occupations of the four modes holding two atoms, lexicographic.
PAIR_BASIS: tuple[tuple[int, int, int, int], ...] = tuple(
    (na1, nb1, na2, nb2)
    for na1 in range(3)
    for nb1 in range(3 - na1)
    for na2 in range(3 - na1 - nb1)
    for nb2 in (2 - na1 - nb1 - na2,)
)

_INDEX = {occ: i for i, occ in enumerate(PAIR_BASIS)}

APPROX_VALIDITY = 0.3  # warn when delta_J/J or U/J exceeds this


@dataclass(frozen=True)
class PhysicalParams:
    """Beam-splitter and loss-stage parameters.

    J, delta_J and U share one energy unit (hbar = 1); tau_d and tau_s are
    the two-atom and single-atom loss time constants in ms.
    """

    J: float
    delta_J: float
    U: float
    tau_d: float
    tau_s: float

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError("hopping J must be positive")
        if self.delta_J < 0 or self.U < 0:
            raise ValueError("delta_J and U must be nonnegative")
        if not self.tau_s > 3.0 * self.tau_d > 0.0:
            raise ValueError("loss stage requires tau_s > 3 tau_d > 0")


class LossStage(NamedTuple):
    t_l: float  # pulse-sequence duration, ms
    q_l: float  # probability a doubly occupied site survives
    p_l: float  # probability a single atom is lost


def fock_vector(weights: dict[tuple[int, int, int, int], complex]) -> np.ndarray:
    """Two-atom state from {occupation: amplitude}, normalized."""
    vec = np.zeros(len(PAIR_BASIS), dtype=np.complex128)
    for occ, amp in weights.items():
        vec[_INDEX[occ]] = amp
    norm = math.sqrt(float(np.vdot(vec, vec).real))
    if norm == 0.0:
        raise ValueError("empty state")
    return vec / norm


def symmetric_pair_states() -> dict[str, np.ndarray]:
    """The three row-symmetric one-atom-per-row states: aa, bb, ab+ba."""
    s = 1 / math.sqrt(2)
    return {
        "aa": fock_vector({(1, 0, 1, 0): 1.0}),
        "bb": fock_vector({(0, 1, 0, 1): 1.0}),
        "ab+ba": fock_vector({(1, 0, 0, 1): s, (0, 1, 1, 0): s}),
    }


def antisymmetric_pair_state() -> np.ndarray:
    """(a_I+ b_II+ - b_I+ a_II+)|vac>/sqrt(2), immune to bunching."""
    s = 1 / math.sqrt(2)
    return fock_vector({(1, 0, 0, 1): s, (0, 1, 1, 0): -s})


def hopping_hamiltonian(J: float) -> np.ndarray:
    """-J sum over species of (row-I+ row-II + h.c.) on the pair basis."""
    H = np.zeros((len(PAIR_BASIS),) * 2)
    for i, occ in enumerate(PAIR_BASIS):
        for src, dst in ((2, 0), (0, 2), (3, 1), (1, 3)):  # a_II<->a_I, b_II<->b_I
            if occ[src] == 0:
                continue
            new = list(occ)
            new[src] -= 1
            new[dst] += 1
            j = _INDEX[tuple(new)]
            H[j, i] += -J * math.sqrt(occ[src] * (occ[dst] + 1))
    return H


def interaction_hamiltonian(U: float) -> np.ndarray:
    """On-site repulsion, species blind: U/2 * n (n - 1) per site."""
    diag = []
    for occ in PAIR_BASIS:
        n_i = occ[0] + occ[1]
        n_ii = occ[2] + occ[3]
        diag.append(U / 2.0 * (n_i * (n_i - 1) + n_ii * (n_ii - 1)))
    return np.diag(diag)


def evolve_pair(state: np.ndarray, J: float, U: float, t: float) -> np.ndarray:
    """exp(+i (H_hop + H_int) t) applied to a two-atom column state."""
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (len(PAIR_BASIS),):
        raise ValueError("expected a two-atom state over the 10 pair occupations")
    H = hopping_hamiltonian(J) + interaction_hamiltonian(U)
    return expm(1j * t * H) @ state


def ideal_bs_map(state: np.ndarray, J: float, t: float) -> np.ndarray:
    """Interaction-free evolution; t = pi/(4J) realizes a perfect beam splitter.

    At that time a row-symmetric two-atom input bunches with probability one
    while the antisymmetric state keeps one atom in each row.
    """
    return evolve_pair(state, J, 0.0, t)


def row_occupancy_probabilities(state: np.ndarray) -> tuple[float, float]:
    """(P both atoms in one row, P one atom per row) for a two-atom state."""
    state = np.asarray(state, dtype=np.complex128)
    p_single = 0.0
    p_double = 0.0
    for amp, occ in zip(state, PAIR_BASIS):
        w = float(abs(amp) ** 2)
        if occ[0] + occ[1] == 1:
            p_single += w
        else:
            p_double += w
    return p_double, p_single


def bunching_time(J: float, U: float = 0.0) -> float:
    """Optimal beam-splitter duration pi / sqrt(16 J**2 + U**2)."""
    if J <= 0:
        raise ValueError("J must be positive")
    return math.pi / math.sqrt(16.0 * J * J + U * U)


def two_qubit_bs_outcome(rho) -> tuple[float, float]:
    """(P_+, P_-) for one column fed two copies of a single-qubit state.

    The pair is symmetric with probability 1 - lam1*lam2 and antisymmetric
    with probability lam1*lam2, equivalently (1 +/- purity)/2.  Accepts a
    2x2 density matrix or the eigenvalue pair directly.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape == (2,):
        lam = rho.real
        if np.abs(rho.imag).max() > 1e-12:
            raise ValueError("eigenvalues must be real")
    elif rho.shape == (2, 2):
        if not np.allclose(rho, rho.conj().T, atol=1e-12):
            raise ValueError("density matrix not Hermitian")
        lam = np.linalg.eigvalsh(rho)
    else:
        raise ValueError("expected a 2x2 matrix or an eigenvalue pair")
    if lam.min() < -1e-12 or abs(lam.sum() - 1.0) > 1e-12:
        raise ValueError(f"invalid spectrum {lam!r}")
    p_minus = float(lam[0] * lam[1])
    return 1.0 - p_minus, p_minus


def qbs_exact(J: float, U: float, t: float) -> float:
    """Exact probability a row-symmetric pair fails to bunch after time t."""
    if J <= 0:
        raise ValueError("J must be positive")
    omega_sq = 16.0 * J * J + U * U
    ratio = U * U / omega_sq
    return (1.0 - ratio) * math.cos(math.sqrt(omega_sq) * t / 2.0) ** 2 + ratio


def qbs_approx(J: float, delta_J: float, U: float) -> float:
    """Second-order bunching failure pi**2/8 (dJ/J)**2 + (U/J)**2 / 16.

    Perturbative in both ratios; a warning is issued beyond 0.3 where the
    expansion degrades, but the value is still returned.
    """
    if J <= 0:
        raise ValueError("J must be positive")
    if delta_J / J > APPROX_VALIDITY or U / J > APPROX_VALIDITY:
        warnings.warn(
            "bunching-failure expansion used outside its validity region "
            f"(delta_J/J = {delta_J / J:.3g}, U/J = {U / J:.3g})",
            stacklevel=2,
        )
    return math.pi**2 / 8.0 * (delta_J / J) ** 2 + (U / J) ** 2 / 16.0


def loss_stage(tau_d: float, tau_s: float) -> LossStage:
    """Duration and error probabilities of the pair-loss pulse sequence.

    Each pair spends a third of the sequence in the resonant state, so pairs
    survive with q_l = exp(-t/(3 tau_d)) while singles are lost with
    p_l = 1 - exp(-t/tau_s); the returned duration minimizes q_l + p_l.
    """
    if not tau_s > 3.0 * tau_d > 0.0:
        raise ValueError("loss stage requires tau_s > 3 tau_d > 0")
    t_l = math.log(tau_s / (3.0 * tau_d)) / (1.0 / (3.0 * tau_d) - 1.0 / tau_s)
    q_l = math.exp(-t_l / (3.0 * tau_d))
    p_l = 1.0 - math.exp(-t_l / tau_s)
    return LossStage(t_l=t_l, q_l=q_l, p_l=p_l)


def physics_summary(params: PhysicalParams) -> dict[str, float]:
    """The (t_bs, q_bs, t_l, q_l, p_l) operating point for given hardware."""
    stage = loss_stage(params.tau_d, params.tau_s)
    return {
        "t_bs": bunching_time(params.J, params.U),
        "q_bs": qbs_approx(params.J, params.delta_J, params.U),
        "t_l": stage.t_l,
        "q_l": stage.q_l,
        "p_l": stage.p_l,
    }
