"""Inverting the error channels: explicit correctors and least squares.

The explicit correctors are closed-form left inverses of the channels and
remove all systematic error; they amplify statistical noise instead, which
is the price quantified in :mod:`latticeprobe.variance`.  Alternating sums
use exact integer binomials and compensated summation, which keeps the
inversion identities tight up to n = 15; larger registers are refused.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channels import detector_error_matrix, spatial_forward_matrix, symmetry_factor
from .network import POSITION_MULTISET, SINGLES_COUNT, OutcomeDistribution
from .purity import PurityProfile

MAX_CORRECTED_QUBITS = 15


class SingularCorrectionError(ValueError):
    """The requested corrector does not exist at these error parameters."""


def _check_n(n: int) -> None:
    if n > MAX_CORRECTED_QUBITS:
        raise ValueError(
            f"correction accuracy is not guaranteed beyond n = {MAX_CORRECTED_QUBITS}"
        )


def _check_rate(value: float, name: str) -> None:
    if not 0.0 <= value < 1.0:
        raise SingularCorrectionError(f"{name} = {value!r} leaves no invertible channel")


def bs_inverse_matrix(n: int, q: float) -> np.ndarray:
    """Exact inverse of the pair-error channel (lower triangular)."""
    _check_n(n)
    _check_rate(q, "q")
    G = np.zeros((n + 1, n + 1))
    for j in range(n + 1):
        for i in range(j + 1):
            G[j, i] = (
                math.comb(n - i, n - j) * (-q) ** (j - i) / (1.0 - q) ** (n - i)
            )
    return G


def invert_bs_error(dist: OutcomeDistribution, q: float) -> OutcomeDistribution:
    """Recover the true antisymmetric-count law from observed pair counts."""
    if dist.mode != SINGLES_COUNT or dist.counts_atoms:
        raise ValueError("expected a pair-count distribution")
    out = bs_inverse_matrix(dist.n, q) @ np.asarray(dist.probs)
    return OutcomeDistribution(mode=SINGLES_COUNT, n=dist.n, probs=np.clip(out, 0.0, None))


def subset_purity_corrected(block_pair_counts, q: float) -> float:
    """Block purity from the probabilities of seeing 2 i_B atoms inside it.

    Needs spatial resolution of the block; reduces to the plain parity
    formula at q = 0.
    """
    probs = np.asarray(block_pair_counts, dtype=float)
    k = probs.size - 1
    _check_n(k)
    _check_rate(q, "q")
    r = (1.0 + q) / (1.0 - q)
    terms = [r ** (k - i) * (-1.0) ** i * probs[i] for i in range(k + 1)]
    return math.fsum(terms)


def bs_estimator_matrix(n: int, q: float) -> np.ndarray:
    """A[k, i]: unbiased avpur_k estimate from observed pair counts i.

    Row magnitudes are bounded by ((1+q)/(1-q))**k, which caps the noise
    amplification of the corrected estimate independently of n.
    """
    _check_n(n)
    _check_rate(q, "q")
    r = (1.0 + q) / (1.0 - q)
    A = np.empty((n + 1, n + 1))
    for k in range(n + 1):
        ck = math.comb(n, k)
        for i in range(n + 1):
            terms = [
                (-1.0) ** l * r ** (k - l) * math.comb(i, l) * math.comb(n - i, k - l)
                for l in range(max(0, k - (n - i)), min(k, i) + 1)
            ]
            A[k, i] = math.fsum(terms) / ck
    return A


def avpur_corrected_bs(dist: OutcomeDistribution, q: float, k: int) -> float:
    """Size-k average purity corrected for pair errors."""
    if dist.mode != SINGLES_COUNT or dist.counts_atoms:
        raise ValueError("expected a pair-count distribution")
    row = bs_estimator_matrix(dist.n, q)[k]
    return float(math.fsum(row * np.asarray(dist.probs)))


def detector_inverse_matrix(n: int, p: float) -> np.ndarray:
    """Explicit detector corrector D[j, i] built from even-count structure.

    The system is over-determined; this solution keeps exactly the printed
    index structure (odd observed counts enter through the alternating tail,
    fractional pair counts are never formed).
    """
    _check_n(n)
    _check_rate(p, "p")
    D = np.zeros((n + 1, 2 * n + 1))
    for j in range(n + 1):
        for i in range(2 * j, 2 * n + 1):
            D[j, i] = math.comb(i, 2 * j) * (-p) ** (i - 2 * j) / (1.0 - p) ** i
    return D


def invert_detector_error_explicit(dist: OutcomeDistribution, p: float) -> OutcomeDistribution:
    """Recover pair counts from detected atom counts via the explicit inverse."""
    if dist.mode != SINGLES_COUNT or not dist.counts_atoms:
        raise ValueError("expected an atom-count distribution")
    out = detector_inverse_matrix(dist.n, p) @ np.asarray(dist.probs)
    return OutcomeDistribution(mode=SINGLES_COUNT, n=dist.n, probs=np.clip(out, 0.0, None))


def invert_least_squares(observed, forward_matrix: np.ndarray) -> np.ndarray:
    """Minimum-residual solution of an over-determined channel equation.

    Unconstrained on purpose: projecting onto the simplex would bias the
    estimator and break the variance analysis.  Raises on rank deficiency.
    """
    F = np.asarray(forward_matrix, dtype=float)
    y = np.asarray(observed, dtype=float)
    solution, _, rank, _ = np.linalg.lstsq(F, y, rcond=None)
    if rank < F.shape[1]:
        raise SingularCorrectionError(
            f"forward matrix rank {rank} < {F.shape[1]} columns"
        )
    return solution


def detector_pinv_matrix(n: int, p: float) -> np.ndarray:
    """Least-squares detector corrector (pseudo-inverse of the channel)."""
    _check_n(n)
    _check_rate(p, "p")
    F = detector_error_matrix(n, p)
    if np.linalg.matrix_rank(F) < n + 1:
        raise SingularCorrectionError("detector channel lost column rank")
    return np.linalg.pinv(F)


def subset_purity_corrected_spatial(block_site_counts, p: float) -> float:
    """Block purity from counts of visible antisymmetric sites in the block.

    With spatial resolution only one atom of a pair must be seen, so the
    effective miss probability per site is p**2.
    """
    probs = np.asarray(block_site_counts, dtype=float)
    k = probs.size - 1
    _check_n(k)
    _check_rate(p, "p")
    r = (1.0 + p * p) / (1.0 - p * p)
    terms = [(-1.0) ** i * r**i * probs[i] for i in range(k + 1)]
    return math.fsum(terms)


# -- spatial blur inversion ---------------------------------------------------


def spatial_explicit_matrix(
    kernel: np.ndarray, n: int
) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Explicit blur corrector: C[bits, A] recovers P(bits) from P_exp(A).

    Row ``bits``: sum over ordered observed lists of the doubled inverse
    kernel columns, weighted s(A)/2**k; grouping ordered lists by their
    multiset turns this into the same multiset-product used by the forward
    channel, evaluated on the inverse kernel.
    """
    from .channels import multiset_coefficients, _blur_columns, spatial_outcomes

    cond = np.linalg.cond(kernel)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularCorrectionError(
            f"position kernel is numerically singular (cond = {cond:.3g})"
        )
    # f_inv(site, position) enters the product with the position varying,
    # so the multiset expansion runs over rows of the inverse kernel.
    inv_rows = np.linalg.inv(kernel).T
    outs = spatial_outcomes(n)
    index = {a: i for i, a in enumerate(outs)}
    C = np.zeros((1 << n, len(outs)))
    for bits in range(1 << n):
        k = bits.bit_count()
        scale = 2.0**-k
        for key, coeff in multiset_coefficients(_blur_columns(inv_rows, bits, n)).items():
            C[bits, index[key]] = scale * symmetry_factor(key) * coeff
    return C, outs


def invert_spatial_explicit(
    dist: OutcomeDistribution, kernel: np.ndarray
) -> dict[int, float]:
    """Recover the antisymmetric-site-set law from blurred positions."""
    if dist.mode != POSITION_MULTISET:
        raise ValueError("expected a position-multiset distribution")
    n = dist.n
    C, outs = spatial_explicit_matrix(kernel, n)
    y = np.zeros(len(outs))
    index = {a: i for i, a in enumerate(outs)}
    for key, prob in dist.table.items():
        y[index[key]] = prob
    vals = C @ y
    return {bits: float(vals[bits]) for bits in range(1 << n)}


def invert_spatial_least_squares(
    dist: OutcomeDistribution, kernel: np.ndarray
) -> dict[int, float]:
    """Least-squares recovery of the antisymmetric-site-set law."""
    if dist.mode != POSITION_MULTISET:
        raise ValueError("expected a position-multiset distribution")
    n = dist.n
    F, outs = spatial_forward_matrix(kernel, n)
    y = np.zeros(len(outs))
    index = {a: i for i, a in enumerate(outs)}
    for key, prob in dist.table.items():
        y[index[key]] = prob
    vals = invert_least_squares(y, F)
    return {bits: float(vals[bits]) for bits in range(1 << n)}


# -- combined correction ------------------------------------------------------


@dataclass(frozen=True)
class CombinedCorrection:
    """Corrected profile tagged with the detector-stage method used."""

    profile: PurityProfile
    detector_method: str


def combined_estimator_matrix(
    n: int, p: float, q: float, detector_method: str = "explicit"
) -> np.ndarray:
    """C[k, i]: avpur_k estimate from detected atom counts i = 0..2n.

    Detector correction first (explicit tail inverse or least squares),
    then the pair-error estimator on the recovered pair counts.
    """
    if detector_method == "explicit":
        D = detector_inverse_matrix(n, p)
    elif detector_method == "least-squares":
        D = detector_pinv_matrix(n, p)
    else:
        raise ValueError(f"unknown detector method {detector_method!r}")
    return bs_estimator_matrix(n, q) @ D


def correct_combined(
    dist: OutcomeDistribution,
    p: float,
    q: float,
    detector_method: str = "explicit",
) -> CombinedCorrection:
    """Full profile from an observed atom-count distribution under both errors."""
    if dist.mode != SINGLES_COUNT or not dist.counts_atoms:
        raise ValueError("expected an atom-count distribution")
    C = combined_estimator_matrix(dist.n, p, q, detector_method)
    avpur = C @ np.asarray(dist.probs)
    return CombinedCorrection(
        profile=PurityProfile(n=dist.n, avpur=avpur), detector_method=detector_method
    )


def correction_matrix_to_csv(matrix: np.ndarray, fileobj) -> None:
    """Audit export of any corrector matrix as (row, col, coefficient)."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["row", "col", "coefficient"])
    for (i, j), v in np.ndenumerate(matrix):
        writer.writerow([i, j, repr(float(v))])
