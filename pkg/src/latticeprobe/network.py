"""The ideal detection network: outcome statistics and their exact inverses.

One run couples two identical rows column by column; the symmetric part of
each column bunches into a doubly occupied site, the antisymmetric part stays
singly occupied.  With spatial resolution the full 2**n sign pattern is
observable; without it only the count j of singly occupied sites survives,
which still determines every size-averaged purity.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .bitops import fwht, popcount
from .purity import PurityProfile, SubsetMask, _coerce_bits

SIGN_PATTERN = "sign-pattern"
SINGLES_COUNT = "singles-count"
POSITION_MULTISET = "position-multiset"

MAX_PATTERN_QUBITS = 10

_NEG_TOL = 1e-12
_SUM_TOL = 1e-10


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities over network outcomes.

    ``mode`` is one of sign-pattern (2**n entries, bit 1 marks an
    antisymmetric column, qubit 1 = MSB), singles-count (entries indexed by a
    count; ``counts_atoms`` distinguishes atom counts 0..2n from pair counts
    0..n) or position-multiset (mapping from a sorted tuple of observed
    positions to probability).  Forward-model outputs must be nonnegative;
    intermediate inverted objects may dip to -1e-12.
    """

    mode: str
    n: int
    probs: np.ndarray | None = None
    table: Mapping[tuple, float] | None = field(default=None)
    counts_atoms: bool = False

    def __post_init__(self):
        if self.mode == POSITION_MULTISET:
            if self.table is None:
                raise ValueError("position-multiset mode requires a table")
            total = math.fsum(self.table.values())
            if min(self.table.values(), default=0.0) < -_NEG_TOL:
                raise ValueError("negative probability in multiset table")
        else:
            arr = np.asarray(self.probs, dtype=float)
            expected = {
                SIGN_PATTERN: 1 << self.n,
                SINGLES_COUNT: (2 * self.n + 1) if self.counts_atoms else (self.n + 1),
            }[self.mode]
            if arr.shape != (expected,):
                raise ValueError(f"expected {expected} entries, got {arr.shape}")
            if arr.min() < -_NEG_TOL:
                raise ValueError(f"negative probability {arr.min():g}")
            total = math.fsum(arr)
            arr.setflags(write=False)
            object.__setattr__(self, "probs", arr)
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")


def sign_pattern_distribution(
    subset_purities: Mapping[int, float], n: int
) -> OutcomeDistribution:
    """Distribution over the 2**n +/- patterns from a complete purity map.

    P_s = 2**-n * sum_B (prod of the s signs over B) * pur(B); requires a
    purity for every one of the 2**n masks (the empty mask has purity 1).
    """
    if n > MAX_PATTERN_QUBITS:
        raise ValueError(f"sign-pattern mode capped at n <= {MAX_PATTERN_QUBITS}")
    pur = np.empty(1 << n)
    try:
        for b in range(1 << n):
            pur[b] = subset_purities[b]
    except KeyError as exc:
        raise ValueError(f"purity map is missing mask {exc}") from exc
    probs = fwht(pur) / (1 << n)
    return OutcomeDistribution(mode=SIGN_PATTERN, n=n, probs=probs)


def purity_from_patterns(dist: OutcomeDistribution, subset) -> float:
    """pur(B) = P(j_B even) - P(j_B odd) read off a sign-pattern distribution."""
    if dist.mode != SIGN_PATTERN:
        raise ValueError("expected a sign-pattern distribution")
    bits = _coerce_bits(dist.n, subset)
    signs = 1.0 - 2.0 * (popcount(np.arange(1 << dist.n) & bits) & 1)
    return float(np.dot(signs, dist.probs))


def singles_from_patterns(dist: OutcomeDistribution) -> OutcomeDistribution:
    """Marginalize a sign-pattern distribution to the antisymmetric count j."""
    if dist.mode != SIGN_PATTERN:
        raise ValueError("expected a sign-pattern distribution")
    counts = popcount(np.arange(1 << dist.n))
    probs = np.bincount(counts, weights=dist.probs, minlength=dist.n + 1)
    return OutcomeDistribution(mode=SINGLES_COUNT, n=dist.n, probs=probs)


def singles_count_matrix(n: int) -> np.ndarray:
    """(n+1) x (n+1) map from an avpur profile to the P(j) vector.

    M[j, k] = 2**-n C(n,k) sum_l (-1)**l C(k,l) C(n-k, j-l), built from exact
    integer binomials; the alternating inner sums stay exact until the final
    scaling, which protects the inversion identities at n = 15.
    """
    M = np.empty((n + 1, n + 1))
    for j in range(n + 1):
        for k in range(n + 1):
            acc = 0
            for l in range(max(0, j - (n - k)), min(k, j) + 1):
                acc += (-1) ** l * math.comb(k, l) * math.comb(n - k, j - l)
            M[j, k] = math.comb(n, k) * acc
    return M / (1 << n)


def avpur_from_pj_matrix(n: int) -> np.ndarray:
    """(n+1) x (n+1) inverse map: W[k, j] recovers avpur_k from P(j)."""
    W = np.empty((n + 1, n + 1))
    for k in range(n + 1):
        ck = math.comb(n, k)
        for j in range(n + 1):
            acc = 0
            for l in range(max(0, k - (n - j)), min(j, k) + 1):
                acc += (-1) ** l * math.comb(j, l) * math.comb(n - j, k - l)
            W[k, j] = acc / ck
    return W


def singles_distribution(profile: PurityProfile) -> OutcomeDistribution:
    """P(j) of measuring j singly occupied sites, from the avpur profile.

    Raises if any entry drops below -1e-9, which signals an unphysical
    (inconsistent) profile rather than rounding noise.
    """
    probs = singles_count_matrix(profile.n) @ profile.avpur
    if probs.min() < -1e-9:
        raise ValueError(
            f"profile is inconsistent: P({int(probs.argmin())}) = {probs.min():g}"
        )
    return OutcomeDistribution(
        mode=SINGLES_COUNT, n=profile.n, probs=np.clip(probs, 0.0, None)
    )


def avpur_from_pj(dist: OutcomeDistribution) -> PurityProfile:
    """Exact inverse of :func:`singles_distribution`."""
    if dist.mode != SINGLES_COUNT or dist.counts_atoms:
        raise ValueError("expected a singles-count distribution over j = 0..n")
    avpur = avpur_from_pj_matrix(dist.n) @ dist.probs
    return PurityProfile(n=dist.n, avpur=avpur)


def pattern_key(pattern: int, n: int) -> str:
    """Bitstring key for a sign pattern: '1' marks an antisymmetric column."""
    return format(pattern, f"0{n}b")


def distribution_to_csv(dist: OutcomeDistribution, fileobj) -> None:
    """CSV export; schema depends on the mode (header names the key column)."""
    writer = csv.writer(fileobj, lineterminator="\n")
    if dist.mode == SIGN_PATTERN:
        writer.writerow(["pattern", "probability"])
        for s, p in enumerate(dist.probs):
            writer.writerow([pattern_key(s, dist.n), repr(float(p))])
    elif dist.mode == SINGLES_COUNT:
        writer.writerow(["i" if dist.counts_atoms else "j", "probability"])
        for j, p in enumerate(dist.probs):
            writer.writerow([j, repr(float(p))])
    else:
        writer.writerow(["positions", "probability"])
        for key in sorted(dist.table):
            writer.writerow([" ".join(map(str, key)), repr(float(dist.table[key]))])


def distribution_to_json(dist: OutcomeDistribution) -> str:
    if dist.mode == SIGN_PATTERN:
        body = {pattern_key(s, dist.n): float(p) for s, p in enumerate(dist.probs)}
    elif dist.mode == SINGLES_COUNT:
        body = [float(p) for p in dist.probs]
    else:
        body = {" ".join(map(str, k)): float(v) for k, v in sorted(dist.table.items())}
    return json.dumps({"mode": dist.mode, "n": dist.n, "probabilities": body})
