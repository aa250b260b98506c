"""Discrete symbol alphabets and the transmit vector set."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Constellation",
    "TransmitVectorSet",
    "DifferenceSet",
    "build_constellation",
    "enumerate_vectors",
    "build_differences",
    "DEFAULT_MAX_VECTORS",
]

DEFAULT_MAX_VECTORS = 4096


@dataclass(frozen=True)
class Constellation:
    kind: str
    order: int
    symbols: np.ndarray


def _gray_to_binary(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def _qam(M: int) -> np.ndarray:
    side = math.isqrt(M)
    bits = side.bit_length() - 1
    # per-axis Gray-coded PAM levels
    levels = np.array([2 * _gray_to_binary(b) - (side - 1) for b in range(side)], dtype=float)
    idx = np.arange(M)
    pts = levels[idx >> bits] + 1j * levels[idx & (side - 1)]
    return pts


def build_constellation(kind: str, M: int) -> Constellation:
    """Unit average energy QAM or PSK alphabet.

    QAM supports square orders that are powers of 4; PSK any ``M >= 2``.
    """
    kind = kind.upper()
    if int(M) != M or M < 2:
        raise ValueError(f"constellation order must be an integer >= 2, got {M}")
    if kind == "QAM":
        if M & (M - 1) or (M.bit_length() - 1) % 2:
            raise ValueError(f"QAM order must be a power of 4, got {M}")
        pts = _qam(M)
    elif kind == "PSK":
        angle = 2 * np.pi * np.arange(M) / M
        pts = np.cos(angle) + 1j * np.sin(angle)
        pts.real[np.abs(pts.real) < 1e-15] = 0.0
        pts.imag[np.abs(pts.imag) < 1e-15] = 0.0
    else:
        raise ValueError(f"unsupported constellation kind {kind!r}; use 'QAM' or 'PSK'")
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(kind, int(M), pts)


@dataclass(frozen=True)
class TransmitVectorSet:
    """All ``M**N_s`` transmit vectors as rows of ``vectors`` (lexicographic)."""

    num_streams: int
    vectors: np.ndarray
    indices: np.ndarray

    def __len__(self):
        return self.vectors.shape[0]


def enumerate_vectors(c: Constellation, num_streams: int, max_vectors: int = DEFAULT_MAX_VECTORS) -> TransmitVectorSet:
    if int(num_streams) != num_streams or num_streams < 1:
        raise ValueError(f"number of streams must be >= 1, got {num_streams}")
    n_vec = c.order**num_streams
    if n_vec > max_vectors:
        raise ValueError(
            f"{c.order}**{num_streams} = {n_vec} transmit vectors exceeds the cap of "
            f"{max_vectors}; lower the modulation order or stream count, or raise max_vectors"
        )
    idx = np.array(list(itertools.product(range(c.order), repeat=num_streams)), dtype=int)
    return TransmitVectorSet(int(num_streams), c.symbols[idx], idx)


@dataclass(frozen=True)
class DifferenceSet:
    """Pairwise differences stored once per unordered pair ``i < j``.

    The ordered pair ``(j, i)`` has the negated difference and the same outer
    product; diagonal pairs are zero.
    """

    num_vectors: int
    first: np.ndarray
    second: np.ndarray
    deltas: np.ndarray
    outers: np.ndarray

    @property
    def num_streams(self) -> int:
        return self.deltas.shape[1]

    def delta(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.zeros(self.num_streams, dtype=complex)
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -1.0
        return sign * self.deltas[self._pair_index(i, j)]

    def outer(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.zeros((self.num_streams,) * 2, dtype=complex)
        if i > j:
            i, j = j, i
        return self.outers[self._pair_index(i, j)]

    def _pair_index(self, i: int, j: int) -> int:
        n = self.num_vectors
        return i * n - i * (i + 1) // 2 + (j - i - 1)


def build_differences(v: TransmitVectorSet) -> DifferenceSet:
    n = len(v)
    first, second = np.triu_indices(n, k=1)
    deltas = v.vectors[first] - v.vectors[second]
    outers = deltas[:, :, None] * deltas[:, None, :].conj()
    return DifferenceSet(n, first, second, deltas, outers)
