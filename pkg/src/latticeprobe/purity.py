"""Subset purities, average purities and the entropic separability checks.

Purity of a reduced block never drops below 2**-k and never exceeds 1; for
separable states purities can only shrink when a subsystem grows, so any
increase along a subset chain (or along the size-averaged profile) certifies
entanglement.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import states
from .bitops import fwht, hamming_matrix, iter_submasks, mask_from_qubits, popcount, qubits_from_mask
from .states import MIXED, PURE, PURE_DEPHASED, QubitRegisterState

DEFAULT_VIOLATION_TOL = 1e-9

_DEDUP_ATOL = 1e-12  # equivalence proof threshold for any purity dedup


@dataclass(frozen=True)
class SubsetMask:
    """Bitmask over columns 1..n selecting a subsystem (qubit 1 = MSB)."""

    n: int
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"mask {self.bits:#x} out of range for n = {self.n}")

    @classmethod
    def from_qubits(cls, n: int, qubits: Iterable[int]) -> "SubsetMask":
        return cls(n, mask_from_qubits(n, qubits))

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    @property
    def qubits(self) -> tuple[int, ...]:
        return qubits_from_mask(self.n, self.bits)

    def complement(self) -> "SubsetMask":
        return SubsetMask(self.n, ((1 << self.n) - 1) ^ self.bits)


@dataclass(frozen=True)
class PurityProfile:
    """Average purities avpur_0..avpur_n; avpur_0 is 1 by convention.

    Exact profiles satisfy 2**-k <= avpur_k <= 1 (see ``within_bounds``);
    finite-sample estimates are allowed to scatter outside that box, so
    construction only enforces shape and finiteness.
    """

    n: int
    avpur: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.avpur, dtype=float)
        if arr.shape != (self.n + 1,):
            raise ValueError(f"profile must have {self.n + 1} entries, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("profile entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "avpur", arr)

    def within_bounds(self, atol: float = 1e-9) -> bool:
        """True if 2**-k - atol <= avpur_k <= 1 + atol for every k."""
        ks = np.arange(self.n + 1)
        lo = 2.0 ** (-ks)
        return bool(np.all(self.avpur >= lo - atol) and np.all(self.avpur <= 1.0 + atol))


@dataclass(frozen=True)
class InequalityVerdict:
    """Outcome of a separability-inequality scan.

    ``witness`` is the pair achieving the largest violation: (k, k') for a
    profile scan, (mask_A, mask_B) with A a submask of B for a subset map.
    """

    violated: bool
    witness: tuple | None
    margin: float
    tolerance: float = DEFAULT_VIOLATION_TOL


def _coerce_bits(n: int, subset) -> int:
    if isinstance(subset, SubsetMask):
        if subset.n != n:
            raise ValueError(f"mask is over {subset.n} qubits, state has {n}")
        return subset.bits
    if isinstance(subset, (int, np.integer)):
        bits = int(subset)
        if not 0 <= bits < (1 << n):
            raise ValueError(f"mask {bits:#x} out of range for n = {n}")
        return bits
    return mask_from_qubits(n, subset)


def _subsystem_matrix(amps: np.ndarray, n: int, bits: int) -> np.ndarray:
    """Reshape amplitudes into a 2**k x 2**(n-k) matrix, subset axes first."""
    axes_b = [i for i in range(n) if bits >> (n - 1 - i) & 1]
    axes_rest = [i for i in range(n) if not bits >> (n - 1 - i) & 1]
    k = len(axes_b)
    t = amps.reshape((2,) * n).transpose(axes_b + axes_rest)
    return np.ascontiguousarray(t.reshape(1 << k, 1 << (n - k)))


def _dense_reduced(rho: np.ndarray, n: int, bits: int) -> np.ndarray:
    """Partial trace of a dense density matrix onto the masked subsystem."""
    axes_b = [i for i in range(n) if bits >> (n - 1 - i) & 1]
    axes_rest = [i for i in range(n) if not bits >> (n - 1 - i) & 1]
    k = len(axes_b)
    perm = axes_b + axes_rest + [n + a for a in axes_b] + [n + a for a in axes_rest]
    t = rho.reshape((2,) * (2 * n)).transpose(perm)
    t = t.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
    return np.einsum("abcb->ac", t)


# -- dephasing moments -------------------------------------------------------
#
# For a pure state damped element-wise by (1-d)**hamming(x, y) the subset
# purity is a polynomial in w = (1-d)**2.  Two equivalent coefficient sets
# are used, picked by block size:
#   shell:  purity = sum_h u[h] w**h          (Hamming shells of G = M M+)
#   parity: purity = 2**-k sum_m (1+w)**(k-m) (1-w)**m V[m]
# where V[m] collects squared Walsh coefficients of M_xz conj(M_xz') by the
# weight of the character mask.  The parity form only touches matrices of
# the complement size, which keeps k close to n tractable.


def _moments_gram(M: np.ndarray, k: int) -> tuple[str, np.ndarray]:
    g = M @ M.conj().T
    u = np.bincount(
        hamming_matrix(k).ravel().astype(np.int64),
        weights=(g.real**2 + g.imag**2).ravel(),
        minlength=k + 1,
    )
    return "shell", u


def _moments_walsh(M: np.ndarray, k: int) -> tuple[str, np.ndarray]:
    g = M[:, :, None] * M.conj()[:, None, :]
    ghat = fwht(g, axis=0)
    v = (ghat.real**2 + ghat.imag**2).sum(axis=(1, 2))
    V = np.bincount(popcount(np.arange(1 << k)), weights=v, minlength=k + 1)
    return "parity", V


def _dephasing_moments(state: QubitRegisterState, bits: int) -> tuple[str, np.ndarray]:
    n = state.n
    k = bits.bit_count()
    M = _subsystem_matrix(np.asarray(state.data), n, bits)
    if k <= 9:
        return _moments_gram(M, k)
    return _moments_walsh(M, k)


def purity_from_moments(kind: str, vec: np.ndarray, d: float) -> float:
    """Evaluate a moment representation at decoherence parameter d."""
    w = (1.0 - d) ** 2
    k = len(vec) - 1
    if kind == "shell":
        return float(np.dot(vec, w ** np.arange(k + 1)))
    m = np.arange(k + 1)
    return float(2.0**-k * np.dot(vec, (1.0 + w) ** (k - m) * (1.0 - w) ** m))


def reduced_purity(state: QubitRegisterState, subset) -> float:
    """Tr(rho_B**2) for the masked subsystem; the empty mask returns 1."""
    n = state.n
    bits = _coerce_bits(n, subset)
    if bits == 0:
        return 1.0
    k = bits.bit_count()
    if state.kind == MIXED:
        rb = _dense_reduced(np.asarray(state.data), n, bits)
        return float(np.sum(rb.real**2 + rb.imag**2))
    if state.kind == PURE or state.dephasing == 0.0:
        if k == n:
            return 1.0
        M = _subsystem_matrix(np.asarray(state.data), n, bits)
        g = M @ M.conj().T if k <= n - k else M.conj().T @ M
        return float(np.sum(g.real**2 + g.imag**2))
    kind, vec = _dephasing_moments(state, bits)
    return purity_from_moments(kind, vec, state.dephasing)


def macro_purity_closed_form(n: int, gamma: complex, k: int) -> float:
    """Closed-form subset purity of the macroscopic superposition family.

    Depends only on the subset size k because the state is totally symmetric.
    """
    if not 0 <= k <= n:
        raise ValueError(f"subset size {k} outside 0..{n}")
    g = complex(gamma)
    if abs(g) > 1 + 1e-14:
        raise ValueError("|gamma| must be <= 1")
    den = (2.0 + 2.0 * (g**n).real) ** 2
    if den < 1e-24:
        raise ValueError("degenerate normalization: gamma^n = -1")
    num = (
        2.0
        + 2.0 * abs(g) ** (2 * k)
        + 2.0 * abs(g) ** (2 * (n - k))
        + 8.0 * (g**n).real
        + 2.0 * (g ** (2 * n)).real
    )
    return num / den


# -- chain transfer evaluation -----------------------------------------------
#
# The nearest-neighbour phase states factor over bonds, so Tr(rho_B**2) is a
# product of 16-dimensional transfer steps: four amplitude chains (ket/bra of
# each density-operator copy) walk the row together, with a per-site weight
# that either glues them pairwise (site traced out) or crosswise with a
# dephasing damping (site kept in B).  Exact for every subset, O(n) per mask,
# and verified on the fly against the generic route before any dedup is used.


def _chain_site_weights(d: float) -> tuple[np.ndarray, np.ndarray]:
    w2 = (1.0 - d) ** 2
    win = np.zeros(16)
    wout = np.zeros(16)
    for s in range(16):
        a, b, bp, ap = s >> 3 & 1, s >> 2 & 1, s >> 1 & 1, s & 1
        if bp == b and ap == a:
            win[s] = w2 if a != b else 1.0
        if b == a and ap == bp:
            wout[s] = 1.0
    return win, wout


def _chain_bond_matrix(phi: float) -> np.ndarray:
    g = np.ones((2, 2), dtype=np.complex128)
    g[0, 1] = np.exp(1j * phi)
    T = np.empty((16, 16), dtype=np.complex128)
    for s in range(16):
        a, b, bp, ap = s >> 3 & 1, s >> 2 & 1, s >> 1 & 1, s & 1
        for t in range(16):
            a2, b2, bp2, ap2 = t >> 3 & 1, t >> 2 & 1, t >> 1 & 1, t & 1
            T[s, t] = (
                g[a, a2] * np.conj(g[b, b2]) * g[bp, bp2] * np.conj(g[ap, ap2])
            )
    return T


def chain_subset_purities(n: int, phi: float, d: float, masks) -> np.ndarray:
    """Subset purities of the phase state (with dephasing d) for many masks."""
    masks = np.asarray(masks, dtype=np.int64)
    win, wout = _chain_site_weights(d)
    T = _chain_bond_matrix(phi)
    in_b = (masks[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    W = np.where(in_b[:, 0, None].astype(bool), win, wout).astype(np.complex128)
    for j in range(1, n):
        W = (W @ T) * np.where(in_b[:, j, None].astype(bool), win, wout)
    vals = W.sum(axis=1) * 4.0**-n
    return vals.real


def _spot_check(values_fast, masks, state, label: str) -> None:
    for val, bits in zip(values_fast, masks):
        ref = reduced_purity(state, int(bits))
        if abs(val - ref) > _DEDUP_ATOL:
            raise RuntimeError(
                f"{label} dedup check failed on mask {int(bits):#x}: "
                f"{val!r} vs generic {ref!r}"
            )


def _masks_of_size(n: int, k: int) -> list[int]:
    return [mask_from_qubits(n, combo) for combo in itertools.combinations(range(1, n + 1), k)]


def average_purity(state: QubitRegisterState, k: int, *, dedup: bool = True) -> float:
    """Mean subset purity over all C(n, k) subsets of size k.

    Totally symmetric and chain-structured families take a deduplicated
    path; each use is guarded by recomputing spot subsets through the
    generic route and demanding agreement to 1e-12.
    """
    n = state.n
    if not 0 <= k <= n:
        raise ValueError(f"subset size {k} outside 0..{n}")
    if k == 0:
        return 1.0
    full = (1 << n) - 1
    if k == n:
        return reduced_purity(state, full)

    if dedup and state.symmetry == "permutation":
        lead = mask_from_qubits(n, range(1, k + 1))
        trail = mask_from_qubits(n, range(n - k + 1, n + 1))
        probes = {lead, trail}
        if n > 2:
            rng = np.random.default_rng(n * 1000 + k)
            probes.add(mask_from_qubits(n, 1 + rng.permutation(n)[:k]))
        vals = {m: reduced_purity(state, m) for m in probes}
        ref = vals[lead]
        for m, v in vals.items():
            if abs(v - ref) > _DEDUP_ATOL:
                raise RuntimeError(
                    f"permutation dedup check failed: pur({m:#x}) = {v!r} != {ref!r}"
                )
        return ref

    if (
        dedup
        and state.symmetry == "chain"
        and state.chain_phase is not None
        and state.is_pure_like()
    ):
        masks = np.asarray(_masks_of_size(n, k), dtype=np.int64)
        vals = chain_subset_purities(n, state.chain_phase, state.dephasing, masks)
        rng = np.random.default_rng(n * 1000 + k)
        probe_idx = rng.permutation(len(masks))[: min(2, len(masks))]
        _spot_check(vals[probe_idx], masks[probe_idx], state, "chain")
        return float(np.mean(vals))

    vals = [reduced_purity(state, m) for m in _masks_of_size(n, k)]
    return float(np.mean(vals))


def avpur_profile(state: QubitRegisterState, *, dedup: bool = True) -> PurityProfile:
    """The full (avpur_0, ..., avpur_n) profile of a state."""
    vals = [average_purity(state, k, dedup=dedup) for k in range(state.n + 1)]
    return PurityProfile(n=state.n, avpur=np.array(vals))


def all_subset_purities(state: QubitRegisterState, *, dedup: bool = True) -> dict[int, float]:
    """Purity for every one of the 2**n masks (n <= 10)."""
    n = state.n
    if n > 10:
        raise ValueError("full subset maps are limited to n <= 10")
    if (
        dedup
        and state.symmetry == "chain"
        and state.chain_phase is not None
        and state.is_pure_like()
    ):
        masks = np.arange(1 << n, dtype=np.int64)
        vals = chain_subset_purities(n, state.chain_phase, state.dephasing, masks)
        rng = np.random.default_rng(n)
        probe_idx = rng.permutation(len(masks))[: min(4, len(masks))]
        _spot_check(vals[probe_idx], masks[probe_idx], state, "chain")
        return {int(m): float(v) for m, v in zip(masks, vals)}
    return {m: reduced_purity(state, m) for m in range(1 << n)}


def check_subset_inequalities(
    purities: PurityProfile | Mapping[int, float],
    tolerance: float = DEFAULT_VIOLATION_TOL,
) -> InequalityVerdict:
    """Scan for entanglement-certifying purity increases.

    For a profile: any avpur_k < avpur_k' with k < k'.  For a subset map:
    any pur(A) < pur(B) with A a submask of B.  ``margin`` is the largest
    violation found; the verdict is positive when it exceeds ``tolerance``.
    """
    best = -math.inf
    witness = None
    if isinstance(purities, PurityProfile):
        avpur = purities.avpur
        for hi in range(1, purities.n + 1):
            for lo in range(hi):
                gap = avpur[hi] - avpur[lo]
                if gap > best:
                    best = gap
                    witness = (lo, hi)
    else:
        for b, pur_b in purities.items():
            for a in iter_submasks(int(b)):
                if a == b or a not in purities:
                    continue
                gap = pur_b - purities[a]
                if gap > best:
                    best = gap
                    witness = (a, int(b))
    if witness is None:
        return InequalityVerdict(False, None, 0.0, tolerance)
    return InequalityVerdict(bool(best > tolerance), witness, float(best), tolerance)


def werner_detection_threshold(n: int) -> float:
    """Largest noise weight at which the Werner mixture still violates the test."""
    if n < 2:
        raise ValueError("threshold defined for n >= 2")
    return 1.0 - (2 ** (n - 1) + 1) ** -0.5


def profile_to_csv(profile: PurityProfile, fileobj) -> None:
    """Write (k, avpur_k) rows with a single-line header."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["k", "avpur"])
    for k, v in enumerate(profile.avpur):
        writer.writerow([k, repr(float(v))])
