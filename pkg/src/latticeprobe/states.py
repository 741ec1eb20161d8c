"""State families probed by the detection network, and the dephasing channel.

Basis convention: qubit 1 is the most significant bit of the basis index x,
so basis states read left to right like an atom row.  States are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bitops import popcount

MAX_QUBITS = 15
MAX_DENSE_QUBITS = 10

PURE = "pure"
PURE_DEPHASED = "pure-dephased"
MIXED = "mixed"

_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class QubitRegisterState:
    """A register of n qubits in one of three representations.

    ``data`` holds 2**n complex amplitudes for the pure kinds, or a
    2**n x 2**n density matrix for ``mixed``.  ``dephasing`` is the
    per-qubit phase-noise parameter d tracked symbolically on pure states
    (the equivalent per-element damping is (1-d)**hamming(x, y)).

    ``symmetry`` is a purity-deduplication hint set by the constructors:
    "permutation" for totally symmetric families, "chain" for the
    nearest-neighbour phase states (``chain_phase`` then carries the
    entangling phase).  It never changes numerical results, only which
    fast path :func:`latticeprobe.purity.average_purity` may take.
    """

    n: int
    kind: str
    data: np.ndarray
    dephasing: float = 0.0
    symmetry: str | None = field(default=None, compare=False)
    chain_phase: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}, got {self.n}")
        dim = 1 << self.n
        arr = np.array(self.data, dtype=np.complex128)
        if self.kind in (PURE, PURE_DEPHASED):
            if arr.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got shape {arr.shape}")
            norm = float(np.vdot(arr, arr).real)
            if abs(norm - 1.0) > _ATOL:
                raise ValueError(f"amplitudes not normalized: |psi|^2 = {norm!r}")
        elif self.kind == MIXED:
            if self.n > MAX_DENSE_QUBITS:
                raise ValueError(
                    f"dense matrices limited to n <= {MAX_DENSE_QUBITS}, got n = {self.n}"
                )
            if arr.shape != (dim, dim):
                raise ValueError(f"expected a {dim} x {dim} matrix, got {arr.shape}")
            tr = float(np.trace(arr).real)
            if abs(tr - 1.0) > _ATOL:
                raise ValueError(f"density matrix trace {tr!r} != 1")
            if not np.allclose(arr, arr.conj().T, atol=_ATOL):
                raise ValueError("density matrix not Hermitian within 1e-12")
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.kind == PURE_DEPHASED:
            if not 0.0 <= self.dephasing <= 1.0:
                raise ValueError("dephasing parameter must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def is_pure_like(self) -> bool:
        return self.kind in (PURE, PURE_DEPHASED)


def pure_state(amplitudes, *, normalize: bool = False, **hints) -> QubitRegisterState:
    """Wrap a user-supplied amplitude vector (length must be a power of two)."""
    arr = np.asarray(amplitudes, dtype=np.complex128)
    n = int(round(math.log2(arr.size)))
    if 1 << n != arr.size:
        raise ValueError(f"amplitude count {arr.size} is not a power of two")
    if normalize:
        arr = arr / math.sqrt(float(np.vdot(arr, arr).real))
    return QubitRegisterState(n=n, kind=PURE, data=arr, **hints)


def mixed_state(matrix, *, check_psd: bool = True, **hints) -> QubitRegisterState:
    """Wrap a user-supplied density matrix (trace 1, Hermitian, PSD)."""
    arr = np.asarray(matrix, dtype=np.complex128)
    n = int(round(math.log2(arr.shape[0])))
    state = QubitRegisterState(n=n, kind=MIXED, data=arr, **hints)
    if check_psd:
        lo = float(np.linalg.eigvalsh(arr).min())
        if lo < -1e-9:
            raise ValueError(f"density matrix not positive semidefinite (min eig {lo:g})")
    return state


def make_macro_superposition(n: int, gamma: complex) -> QubitRegisterState:
    """Macroscopic superposition of the all-zero row with a tilted product row.

    Returns the normalized pure state
    (|0>^n + (gamma|0> + sqrt(1-|gamma|^2)|1>)^n) / sqrt(2 + gamma^n + conj(gamma)^n).
    gamma = 0 gives the maximally entangled (GHZ-type) state.
    """
    gamma = complex(gamma)
    if abs(gamma) > 1 + 1e-14:
        raise ValueError(f"|gamma| must be <= 1, got {abs(gamma):g}")
    denom_sq = 2.0 + 2.0 * (gamma**n).real
    if denom_sq < _ATOL:
        raise ValueError("degenerate normalization: gamma^n = -1")
    beta = math.sqrt(max(0.0, 1.0 - abs(gamma) ** 2))
    weights = popcount(np.arange(1 << n))
    amps = gamma ** (n - weights) * beta**weights
    amps = np.asarray(amps, dtype=np.complex128)
    amps[0] += 1.0
    amps /= math.sqrt(denom_sq)
    return QubitRegisterState(n=n, kind=PURE, data=amps, symmetry="permutation")


def make_ghz(n: int) -> QubitRegisterState:
    """(|0...0> + |1...1>)/sqrt(2), the gamma = 0 macroscopic superposition."""
    return make_macro_superposition(n, 0.0)


def count_01_substrings(x: int, n: int) -> int:
    """Occurrences of the pattern ``01`` in the n-bit expansion of x (MSB first)."""
    count = 0
    for j in range(n - 1):
        hi = x >> (n - 1 - j) & 1
        lo = x >> (n - 2 - j) & 1
        count += (hi == 0) and (lo == 1)
    return count


def _count_01_all(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    counts = np.zeros(1 << n, dtype=np.int64)
    for j in range(n - 1):
        hi = idx >> (n - 1 - j) & 1
        lo = idx >> (n - 2 - j) & 1
        counts += (hi == 0) & (lo == 1)
    return counts


def make_phi_state(n: int, phi: float) -> QubitRegisterState:
    """Nearest-neighbour phase state: amplitude exp(i*phi*c(x))/2**(n/2).

    c(x) counts ``01`` substrings of the n-bit string x, with no wrap-around,
    so the last qubit only picks up phase through its left neighbour.  At
    phi = pi this is a one-dimensional cluster state; at multiples of 2*pi
    it is a product state.
    """
    amps = np.exp(1j * phi * _count_01_all(n)) / math.sqrt(1 << n)
    return QubitRegisterState(
        n=n, kind=PURE, data=amps, symmetry="chain", chain_phase=float(phi)
    )


def make_cluster(n: int) -> QubitRegisterState:
    """The phi = pi phase state (1D cluster state)."""
    return make_phi_state(n, math.pi)


def make_werner(n: int, d: float) -> QubitRegisterState:
    """(1-d) |GHZ><GHZ| + d * I / 2**n as a dense matrix (n <= 10)."""
    if not 0.0 <= d <= 1.0:
        raise ValueError("noise weight d must lie in [0, 1]")
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense Werner states limited to n <= {MAX_DENSE_QUBITS}")
    ghz = make_ghz(n).data
    rho = (1.0 - d) * np.outer(ghz, ghz.conj())
    rho[np.diag_indices_from(rho)] += d / (1 << n)
    return QubitRegisterState(n=n, kind=MIXED, data=rho, symmetry="permutation")


def make_classical_correlated(n: int) -> QubitRegisterState:
    """(|0>^n <0|^n + |1>^n <1|^n) / 2, a separable correlated mixture."""
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense matrices limited to n <= {MAX_DENSE_QUBITS}")
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 0.5
    rho[dim - 1, dim - 1] = 0.5
    return QubitRegisterState(n=n, kind=MIXED, data=rho, symmetry="permutation")


def _dephase_dense(rho: np.ndarray, d: float, n: int) -> np.ndarray:
    """Phase-noise map applied literally: sum over all phase-flip subsets A
    with weight (1 - d/2)**(n-|A|) * (d/2)**|A|."""
    idx = np.arange(1 << n)
    out = np.zeros_like(rho)
    for mask in range(1 << n):
        size = int(mask).bit_count()
        w = (1.0 - d / 2.0) ** (n - size) * (d / 2.0) ** size
        if w == 0.0:
            continue
        signs = 1.0 - 2.0 * (popcount(idx & mask) & 1)
        out += w * (signs[:, None] * signs[None, :]) * rho
    return out


def apply_dephasing(state: QubitRegisterState, d: float) -> QubitRegisterState:
    """Independent per-qubit phase noise with decoherence parameter d.

    Dense matrices get the explicit subset-sum map; pure states stay in
    amplitude form and carry d symbolically (purity code applies the
    per-element damping (1-d)**hamming, an equivalence covered by tests).
    Dephasing twice composes as 1 - (1-d1)(1-d2).
    """
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"decoherence parameter must lie in [0, 1], got {d!r}")
    if state.kind == MIXED:
        return QubitRegisterState(
            n=state.n,
            kind=MIXED,
            data=_dephase_dense(np.asarray(state.data), d, state.n),
            symmetry=state.symmetry,
            chain_phase=state.chain_phase,
        )
    if state.kind == PURE and d == 0.0:
        return state
    d_prev = state.dephasing if state.kind == PURE_DEPHASED else 0.0
    d_total = d if d_prev == 0.0 else 1.0 - (1.0 - d_prev) * (1.0 - d)
    return QubitRegisterState(
        n=state.n,
        kind=PURE_DEPHASED,
        data=state.data,
        dephasing=d_total,
        symmetry=state.symmetry,
        chain_phase=state.chain_phase,
    )


def state_to_json(state: QubitRegisterState) -> str:
    """Serialize to the fixture schema {n, kind, amplitudes, d?}."""
    flat = np.asarray(state.data).ravel()
    doc = {
        "n": state.n,
        "kind": state.kind,
        "amplitudes": [[float(z.real), float(z.imag)] for z in flat],
    }
    if state.kind == PURE_DEPHASED:
        doc["d"] = state.dephasing
    return json.dumps(doc)


def state_from_json(text: str) -> QubitRegisterState:
    """Inverse of :func:`state_to_json` (symmetry hints are not persisted)."""
    doc = json.loads(text)
    n = int(doc["n"])
    kind = doc["kind"]
    flat = np.array([complex(re, im) for re, im in doc["amplitudes"]])
    if kind == MIXED:
        dim = 1 << n
        return QubitRegisterState(n=n, kind=MIXED, data=flat.reshape(dim, dim))
    return QubitRegisterState(
        n=n, kind=kind, data=flat, dephasing=float(doc.get("d", 0.0))
    )
