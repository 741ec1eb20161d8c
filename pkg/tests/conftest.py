"""Shared oracles and fixtures.

The oracles here are deliberately literal: full density matrices, explicit
partial traces, explicit two-copy swap projectors and an explicit Kraus sum
for the phase-noise channel.  They are slow and independent of the library's
computation paths, which is the point.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from latticeprobe.purity import avpur_profile
from latticeprobe.states import MIXED, PURE_DEPHASED, QubitRegisterState, make_cluster


def full_density_matrix(state: QubitRegisterState) -> np.ndarray:
    """Dense matrix of any state; symbolic dephasing is materialized
    element-wise (the damping form, used only where that is the claim
    under test is *not* the dephasing representation itself)."""
    if state.kind == MIXED:
        return np.array(state.data)
    psi = np.asarray(state.data)
    rho = np.outer(psi, psi.conj())
    if state.kind == PURE_DEPHASED and state.dephasing > 0.0:
        idx = np.arange(1 << state.n)
        ham = np.bitwise_count((idx[:, None] ^ idx[None, :]).astype(np.uint64))
        rho = rho * (1.0 - state.dephasing) ** ham.astype(float)
    return rho


def partial_trace(rho: np.ndarray, n: int, bits: int) -> np.ndarray:
    """Explicit partial trace onto the masked qubits (qubit 1 = MSB)."""
    axes_b = [i for i in range(n) if bits >> (n - 1 - i) & 1]
    axes_r = [i for i in range(n) if not bits >> (n - 1 - i) & 1]
    k = len(axes_b)
    perm = axes_b + axes_r + [n + a for a in axes_b] + [n + a for a in axes_r]
    t = rho.reshape((2,) * (2 * n)).transpose(perm)
    t = t.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
    return np.einsum("abcb->ac", t)


def brute_purity(state: QubitRegisterState, bits: int) -> float:
    """Purity by full-matrix partial trace; the reference for every fast path."""
    if bits == 0:
        return 1.0
    rho_b = partial_trace(full_density_matrix(state), state.n, bits)
    return float(np.sum(np.abs(rho_b) ** 2))


def brute_average_purity(state: QubitRegisterState, k: int) -> float:
    vals = []
    for combo in itertools.combinations(range(state.n), k):
        bits = sum(1 << (state.n - 1 - c) for c in combo)
        vals.append(brute_purity(state, bits))
    return float(np.mean(vals)) if vals else 1.0


def dephase_kraus_oracle(rho: np.ndarray, d: float, n: int) -> np.ndarray:
    """Literal phase-noise channel: weighted sum over all Z-flip subsets."""
    z = np.array([[1.0, 0.0], [0.0, -1.0]])
    eye = np.eye(2)
    out = np.zeros_like(rho, dtype=complex)
    for flips in itertools.product((0, 1), repeat=n):
        op = np.array([[1.0]])
        for f in flips:
            op = np.kron(op, z if f else eye)
        w = (d / 2.0) ** sum(flips) * (1.0 - d / 2.0) ** (n - sum(flips))
        out += w * op @ rho @ op
    return out


def swap_qubit_matrix(n: int, j: int) -> np.ndarray:
    """Permutation swapping qubit j of copy one with qubit j of copy two
    in a 2n-qubit register (copy one occupies the high bits)."""
    dim = 1 << (2 * n)
    hi = 2 * n - j
    lo = n - j
    V = np.zeros((dim, dim))
    for x in range(dim):
        b1 = x >> hi & 1
        b2 = x >> lo & 1
        y = x & ~(1 << hi) & ~(1 << lo) | (b2 << hi) | (b1 << lo)
        V[y, x] = 1.0
    return V


def two_copy_pattern_probabilities(rho: np.ndarray, n: int) -> np.ndarray:
    """P over all 2**n sign patterns via the literal projector product on
    rho (x) rho; pattern bit 1 selects the antisymmetric projector."""
    rr = np.kron(rho, rho)
    dim = rr.shape[0]
    probs = np.empty(1 << n)
    for pattern in range(1 << n):
        op = np.eye(dim)
        for j in range(1, n + 1):
            sign = -1.0 if pattern >> (n - j) & 1 else 1.0
            op = op @ (np.eye(dim) + sign * swap_qubit_matrix(n, j)) / 2.0
        probs[pattern] = np.trace(op @ rr).real
    return probs


def random_mixed_matrix(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    dim = 1 << n
    rank = rank or dim
    A = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_pure_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


@pytest.fixture(scope="session")
def cluster15_profile():
    """The n = 15 cluster-state profile, shared by the slow acceptance tests."""
    return avpur_profile(make_cluster(15))
