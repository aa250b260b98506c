"""Wave-domain beamforming cascades of the transmit and receive SIM.

Layer indices in the public ``theta_product``/``upsilon_product`` API are
1-based to match the layer numbering of the stacks; the phase and matrix
lists themselves are ordinary 0-based Python lists.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

__all__ = [
    "DesignPoint",
    "CascadeCache",
    "transmit_cascade",
    "receive_cascade",
    "end_to_end",
    "theta_product",
    "upsilon_product",
    "evaluate_cascades",
]

_versions = itertools.count(1)


@dataclass(frozen=True)
class DesignPoint:
    """Precoder ``P`` (``N_t x N_s``) and per-layer unit-modulus phases.

    Design points are treated as immutable; the ``with_*`` helpers return a
    new point carrying a fresh version number.
    """

    P: np.ndarray
    phi: List[np.ndarray]
    psi: List[np.ndarray]
    version: int = field(default_factory=lambda: next(_versions), compare=False)

    def with_P(self, P) -> "DesignPoint":
        return DesignPoint(P, self.phi, self.psi)

    def with_phi(self, l: int, value) -> "DesignPoint":
        phi = list(self.phi)
        phi[l] = value
        return DesignPoint(self.P, phi, self.psi)

    def with_psi(self, k: int, value) -> "DesignPoint":
        psi = list(self.psi)
        psi[k] = value
        return DesignPoint(self.P, self.phi, psi)


def transmit_cascade(phi: Sequence[np.ndarray], W: Sequence[np.ndarray]) -> np.ndarray:
    """``B = Phi^L W^L ... Phi^1 W^1``, applied right to left as row scalings."""
    if len(phi) != len(W):
        raise ValueError(f"{len(phi)} phase vectors for {len(W)} transmit layers")
    B = None
    for p, w in zip(phi, W):
        X = w if B is None else w @ B
        if X.shape[0] != p.shape[0]:
            raise ValueError(f"phase vector of length {p.shape[0]} for a layer of {X.shape[0]} atoms")
        B = p[:, None] * X
    return B


def receive_cascade(psi: Sequence[np.ndarray], U: Sequence[np.ndarray]) -> np.ndarray:
    """``Z = U^1 Psi^1 U^2 Psi^2 ... U^K Psi^K``, applied as column scalings."""
    if len(psi) != len(U):
        raise ValueError(f"{len(psi)} phase vectors for {len(U)} receive layers")
    Z = None
    for p, u in zip(psi, U):
        X = u if Z is None else Z @ u
        if X.shape[1] != p.shape[0]:
            raise ValueError(f"phase vector of length {p.shape[0]} for a layer of {X.shape[1]} atoms")
        Z = X * p[None, :]
    return Z


def end_to_end(Z: np.ndarray, G: np.ndarray, B: np.ndarray) -> np.ndarray:
    if Z.shape[1] != G.shape[0] or G.shape[1] != B.shape[0]:
        raise ValueError(f"non-conformal shapes Z{Z.shape} G{G.shape} B{B.shape}")
    return Z @ (G @ B)


def theta_product(m: int, n: int, phi: Sequence[np.ndarray], W: Sequence[np.ndarray]) -> np.ndarray:
    """``(W^m)^H (Phi^m)^H ... (W^n)^H (Phi^n)^H``; identity when ``m > n``.

    The empty product's size is the output width of layer ``n`` (``N_t``
    for ``n = 0``).
    """
    L = len(W)
    if not (1 <= m <= L + 1 and 0 <= n <= L):
        raise IndexError(f"theta range {m}:{n} outside 1..{L}")
    if m > n:
        size = W[n - 1].shape[0] if n >= 1 else W[0].shape[1]
        return np.eye(size, dtype=complex)
    X = phi[m - 1][:, None] * W[m - 1]
    for l in range(m, n):
        X = phi[l][:, None] * (W[l] @ X)
    return X.conj().T


def upsilon_product(m: int, n: int, psi: Sequence[np.ndarray], U: Sequence[np.ndarray]) -> np.ndarray:
    """``(Psi^m)^H (U^m)^H (Psi^{m-1})^H ... (U^n)^H``; identity when ``m < n``."""
    K = len(U)
    if not (0 <= m <= K and 1 <= n <= K + 1):
        raise IndexError(f"upsilon range {m}:{n} outside 1..{K}")
    if m < n:
        size = U[n - 1].shape[0] if n <= K else U[K - 1].shape[1]
        return np.eye(size, dtype=complex)
    X = U[n - 1] * psi[n - 1][None, :]
    for k in range(n, m):
        X = (X @ U[k]) * psi[k][None, :]
    return X.conj().T


@dataclass(frozen=True)
class CascadeCache:
    B: np.ndarray
    Z: np.ndarray
    H: np.ndarray
    version: int

    def is_fresh(self, point: DesignPoint) -> bool:
        return self.version == point.version


def evaluate_cascades(point: DesignPoint, W, U, G) -> CascadeCache:
    B = transmit_cascade(point.phi, W)
    Z = receive_cascade(point.psi, U)
    return CascadeCache(B, Z, end_to_end(Z, G, B), point.version)
