"""Forward error channels between ideal and observed outcome statistics.

Two error species cover the hardware: extra atom pairs (a symmetric column
failing to bunch or to lose its pair, probability q per column) and missing
single atoms (detector or single-atom loss, probability p per atom).  Both
act independently per site, which makes every channel a small stochastic
matrix over counts.  Limited spatial resolution adds a Gaussian blur over
site positions.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .beamsplitter import bunching_time, qbs_exact
from .bitops import qubits_from_mask
from .network import POSITION_MULTISET, SINGLES_COUNT, OutcomeDistribution

MAX_SPATIAL_QUBITS = 6


@dataclass(frozen=True)
class ErrorParams:
    """Channel parameters: q per pair, p per atom, blur width sigma.

    sigma and the lattice wavelength share one length unit; sites sit at
    spacing wavelength/2.
    """

    q: float = 0.0
    p: float = 0.0
    sigma: float = 0.0
    wavelength: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError("pair error q must lie in [0, 1)")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("miss probability p must lie in [0, 1)")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")


@dataclass(frozen=True)
class JDistribution:
    """Quadrature nodes and weights for a run-to-run hopping distribution."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if weights.min() < 0.0:
            raise ValueError("quadrature weights must be nonnegative")
        if abs(math.fsum(weights) - 1.0) > 1e-10:
            raise ValueError("quadrature weights must sum to 1")
        if nodes.min() <= 0.0:
            raise ValueError("hopping nodes must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def mean(self) -> float:
        return float(np.dot(self.nodes, self.weights))

    @classmethod
    def point(cls, J: float) -> "JDistribution":
        return cls(nodes=np.array([J]), weights=np.array([1.0]))

    @classmethod
    def gaussian(
        cls, mean: float, std: float, n_nodes: int = 32, span: float = 4.0
    ) -> "JDistribution":
        """Gauss-Legendre quadrature of a normal density over +/- span sigmas."""
        if std == 0.0:
            return cls.point(mean)
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        lo = max(mean - span * std, 1e-12 * mean)
        hi = mean + span * std
        nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        dens = np.exp(-0.5 * ((nodes - mean) / std) ** 2)
        weights = w * dens
        weights /= math.fsum(weights)
        return cls(nodes=nodes, weights=weights)

    @classmethod
    def gaussian_amplitude(
        cls, mean: float, delta_j: float, n_nodes: int = 32, span: float = 4.0
    ) -> "JDistribution":
        """Gaussian hopping noise in the amplitude convention of the
        perturbative failure formula: delta_j denotes a fluctuation amplitude
        with mean-square delta_j**2/2, i.e. a standard deviation delta_j/sqrt(2)."""
        return cls.gaussian(mean, delta_j / math.sqrt(2.0), n_nodes, span)


def _require_singles(dist: OutcomeDistribution, atoms: bool = False) -> np.ndarray:
    if dist.mode != SINGLES_COUNT or dist.counts_atoms != atoms:
        kind = "atom counts" if atoms else "pair counts"
        raise ValueError(f"expected a singles-count distribution over {kind}")
    return np.asarray(dist.probs)


def bs_error_matrix(n: int, q: float) -> np.ndarray:
    """(n+1) x (n+1) map from true antisymmetric counts j to observed pair
    counts i: each of the n-j symmetric columns fails with probability q."""
    F = np.zeros((n + 1, n + 1))
    for j in range(n + 1):
        for i in range(j, n + 1):
            F[i, j] = math.comb(n - j, i - j) * q ** (i - j) * (1.0 - q) ** (n - i)
    return F


def apply_bs_error(dist: OutcomeDistribution, q: float) -> OutcomeDistribution:
    """Pair-error channel; output entry i is the chance of detecting 2i atoms."""
    probs = _require_singles(dist)
    out = bs_error_matrix(dist.n, q) @ probs
    return OutcomeDistribution(mode=SINGLES_COUNT, n=dist.n, probs=out)


def detector_error_matrix(n: int, p: float) -> np.ndarray:
    """(2n+1) x (n+1) map from pair counts (2j atoms) to detected atom counts."""
    F = np.zeros((2 * n + 1, n + 1))
    for j in range(n + 1):
        for i in range(2 * j + 1):
            F[i, j] = math.comb(2 * j, i) * p ** (2 * j - i) * (1.0 - p) ** i
    return F


def apply_detector_error(dist: OutcomeDistribution, p: float) -> OutcomeDistribution:
    """Atom-miss channel: each of the 2j atoms is seen with probability 1-p."""
    probs = _require_singles(dist)
    out = detector_error_matrix(dist.n, p) @ probs
    return OutcomeDistribution(mode=SINGLES_COUNT, n=dist.n, probs=out, counts_atoms=True)


def average_bunching_failure(jdist: JDistribution, U: float, t: float | None = None) -> float:
    """Channel-averaged bunching failure sum_i w_i q(J_i) at fixed time t."""
    if t is None:
        t = bunching_time(jdist.mean, U)
    return float(math.fsum(w * qbs_exact(J, U, t) for J, w in zip(jdist.nodes, jdist.weights)))


def bs_error_matrix_random_J(
    n: int, jdist: JDistribution, U: float, t: float | None = None
) -> np.ndarray:
    """Pair-error channel averaged over run-to-run hopping fluctuations.

    The splitter time is fixed at the optimum for the mean hopping, so each
    run sees its own failure probability q(J).
    """
    if t is None:
        t = bunching_time(jdist.mean, U)
    F = np.zeros((n + 1, n + 1))
    for J, w in zip(jdist.nodes, jdist.weights):
        F += w * bs_error_matrix(n, qbs_exact(J, U, t))
    return F


def apply_bs_error_random_J(
    dist: OutcomeDistribution,
    jdist: JDistribution,
    U: float,
    t: float | None = None,
) -> OutcomeDistribution:
    probs = _require_singles(dist)
    out = bs_error_matrix_random_J(dist.n, jdist, U, t) @ probs
    return OutcomeDistribution(mode=SINGLES_COUNT, n=dist.n, probs=out)


def site_miss_matrix(k: int, p: float) -> np.ndarray:
    """(k+1) x (k+1) channel for spatially resolved detection in a block.

    An antisymmetric site stays visible unless both of its atoms are missed,
    so sites disappear independently with probability p**2.
    """
    eff = p * p
    F = np.zeros((k + 1, k + 1))
    for j in range(k + 1):
        for i in range(j + 1):
            F[i, j] = math.comb(j, i) * eff ** (j - i) * (1.0 - eff) ** i
    return F


def gaussian_position_kernel(sigma: float, wavelength: float, n: int) -> np.ndarray:
    """Blur matrix f[x, y]: chance of seeing in bin x an atom at site y.

    Sites sit at spacing wavelength/2 with observation bins of the same width
    centred on them.  Mass falling outside the n-site window is folded into
    the nearest edge bin, which keeps every column an exact probability
    distribution (and the matrix invertible for moderate sigma).
    """
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return np.eye(n)
    pos = np.arange(n) * (wavelength / 2.0)
    delta = pos[:, None] - pos[None, :]
    half = wavelength / 4.0
    upper = ndtr((delta + half) / sigma)
    lower = ndtr((delta - half) / sigma)
    F = upper - lower
    F[0, :] += ndtr((delta[0, :] - half) / sigma)
    F[n - 1, :] += 1.0 - ndtr((delta[n - 1, :] + half) / sigma)
    return F


def symmetry_factor(positions: tuple[int, ...]) -> int:
    """Number of list permutations fixing an ordered multiset of positions."""
    s = 1
    for _, grp in itertools.groupby(positions):
        s *= math.factorial(sum(1 for _ in grp))
    return s


def multiset_coefficients(columns: list[np.ndarray]) -> dict[tuple[int, ...], float]:
    """Coefficient of each position multiset in prod_j sum_x v_j[x] X_x.

    Equals the sum over all distinct orderings of the multiset of the
    product of per-draw values; for probability columns this is exactly the
    law of the unordered draw.
    """
    acc: dict[tuple[int, ...], float] = {(): 1.0}
    for col in columns:
        nxt: dict[tuple[int, ...], float] = {}
        for key, val in acc.items():
            for x, vx in enumerate(col):
                if vx == 0.0:
                    continue
                new = tuple(sorted(key + (x,)))
                nxt[new] = nxt.get(new, 0.0) + val * vx
        acc = nxt
    return acc


def _blur_columns(kernel: np.ndarray, bits: int, n: int) -> list[np.ndarray]:
    cols = []
    for qubit in qubits_from_mask(n, bits):
        cols.append(kernel[:, qubit - 1])
        cols.append(kernel[:, qubit - 1])
    return cols


def apply_spatial_blur(
    site_probs: dict[int, float], kernel: np.ndarray, n: int
) -> OutcomeDistribution:
    """Blur a distribution over antisymmetric-site sets into observed positions.

    Each antisymmetric site contributes two atoms (one per row) at its column
    position; every atom is smeared independently through the kernel.  Keys
    of the result are sorted tuples of observed position indices.
    """
    if n > MAX_SPATIAL_QUBITS:
        raise ValueError(f"spatial mode capped at n <= {MAX_SPATIAL_QUBITS}")
    table: dict[tuple[int, ...], float] = {}
    for bits, prob in site_probs.items():
        if prob == 0.0:
            continue
        for key, coeff in multiset_coefficients(_blur_columns(kernel, bits, n)).items():
            table[key] = table.get(key, 0.0) + prob * coeff
    return OutcomeDistribution(mode=POSITION_MULTISET, n=n, table=table)


def spatial_outcomes(n: int) -> list[tuple[int, ...]]:
    """Every observable position multiset: sizes 0, 2, ..., 2n over n sites."""
    outs: list[tuple[int, ...]] = []
    for k in range(n + 1):
        outs.extend(itertools.combinations_with_replacement(range(n), 2 * k))
    return outs


def spatial_forward_matrix(kernel: np.ndarray, n: int) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Stacked blur channel: rows are outcome multisets, columns site masks."""
    outs = spatial_outcomes(n)
    index = {a: i for i, a in enumerate(outs)}
    F = np.zeros((len(outs), 1 << n))
    for bits in range(1 << n):
        for key, coeff in multiset_coefficients(_blur_columns(kernel, bits, n)).items():
            F[index[key], bits] = coeff
    return F, outs


def compose_channels(*matrices: np.ndarray) -> np.ndarray:
    """Left-to-right physical composition: last matrix applied last."""
    out = matrices[0]
    for m in matrices[1:]:
        out = m @ out
    return out


def matrix_to_csv(matrix: np.ndarray, fileobj, label: str = "value") -> None:
    """Dump a channel or kernel matrix as (row, col, value) triples."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["row", "col", label])
    for (i, j), v in np.ndenumerate(matrix):
        writer.writerow([i, j, repr(float(v))])
