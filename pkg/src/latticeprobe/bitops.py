"""Bit-level helpers shared by the mask, state and distribution code.

Convention used throughout the package: qubit ``i`` (1-based, read left to
right along the atom row) occupies bit ``n - i`` of a basis index or subset
mask, i.e. qubit 1 is the most significant bit.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable

import numpy as np


def popcount(values) -> np.ndarray:
    """Per-element population count of an integer array."""
    return np.bitwise_count(np.asarray(values, dtype=np.uint64)).astype(np.int64)


def mask_from_qubits(n: int, qubits: Iterable[int]) -> int:
    """Bitmask for a collection of 1-based qubit labels."""
    bits = 0
    for q in qubits:
        if not 1 <= q <= n:
            raise ValueError(f"qubit label {q} outside 1..{n}")
        bits |= 1 << (n - q)
    return bits


def qubits_from_mask(n: int, bits: int) -> tuple[int, ...]:
    """Sorted 1-based qubit labels selected by a bitmask."""
    return tuple(i for i in range(1, n + 1) if bits >> (n - i) & 1)


def parity_signs(mask: int, n: int) -> np.ndarray:
    """Vector of (-1)**popcount(mask & x) over all basis indices x."""
    par = popcount(np.arange(1 << n) & mask) & 1
    return (1 - 2 * par).astype(np.int8)


@lru_cache(maxsize=32)
def hamming_matrix(k: int) -> np.ndarray:
    """Matrix H[x, y] = popcount(x ^ y) over k-bit indices (k <= 12)."""
    if k > 12:
        raise ValueError("hamming_matrix capped at k = 12 (memory)")
    idx = np.arange(1 << k)
    return np.bitwise_count(idx[:, None] ^ idx[None, :]).astype(np.uint8)


def fwht(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along ``axis``."""
    a = np.array(np.moveaxis(a, axis, 0))
    m = a.shape[0]
    h = 1
    while h < m:
        a = a.reshape(m // (2 * h), 2, h, *a.shape[1:])
        top = a[:, 0] + a[:, 1]
        bot = a[:, 0] - a[:, 1]
        a = np.stack([top, bot], axis=1).reshape(m, *a.shape[3:])
        h *= 2
    return np.moveaxis(a, 0, axis)


def iter_submasks(mask: int):
    """Yield every submask of ``mask`` including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask
