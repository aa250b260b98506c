"""Wirtinger gradients of the cutoff-rate objective.

All gradients are taken with respect to the conjugate variable, so for a
real objective ``f`` and a perturbation ``dx``,
``f(x + dx) - f(x) ~= 2 Re <grad, dx>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from .signaling import DifferenceSet

__all__ = [
    "GradientBundle",
    "weighted_pair_sum",
    "grad_precoder",
    "grad_phase_tx",
    "grad_phase_rx",
    "gradient_bundle",
    "directional_fd_error",
]


@dataclass(frozen=True)
class GradientBundle:
    grad_P: np.ndarray
    grad_phi: List[np.ndarray]
    grad_psi: List[np.ndarray]
    weight_sum: np.ndarray


def weighted_pair_sum(d: np.ndarray, sigma2: float, diffs: DifferenceSet) -> np.ndarray:
    """``sum_{i,j} exp(-F_ij / 4 sigma^2) dx_ij dx_ij^H`` over ordered pairs.

    ``d`` holds the distances of the stored unordered pairs (see
    ``objective.pair_distances``); a full ``N_vec x N_vec`` matrix is also
    accepted.
    """
    d = np.asarray(d)
    if d.ndim == 2:
        d = d[diffs.first, diffs.second]
    w = np.exp(-d / (4 * sigma2))
    S = 2.0 * np.einsum("p,pab->ab", w, diffs.outers)
    return (S + S.conj().T) / 2


def grad_precoder(H, P, weight_sum, sigma2):
    return -(H.conj().T @ (H @ (P @ weight_sum))) / (4 * sigma2)


def _core(H, P, weight_sum):
    # H P S P^H, the N_r x N_t kernel shared by the phase gradients
    return (H @ P) @ weight_sum @ P.conj().T


def grad_phase_tx(l: int, phi: Sequence[np.ndarray], W: Sequence[np.ndarray], G, Z, H, P,
                  weight_sum, sigma2) -> np.ndarray:
    """Gradient w.r.t. the conjugate phases of transmit layer ``l`` (1-based).

    Diagonal of ``Theta^{l+1:L} G^H Z^H H P S P^H Theta^{1:l-1} (W^l)^H``
    scaled by ``-1 / (4 sigma^2)``. Only thin ``N x N_t`` products are
    formed.
    """
    L = len(W)
    if not 1 <= l <= L:
        raise IndexError(f"transmit layer {l} outside 1..{L}")
    # right factor: (W^l B_{l-1})^H, B_0 = I
    C = W[0]
    for m in range(1, l):
        C = W[m] @ (phi[m - 1][:, None] * C)
    # left factor: Theta^{l+1:L} G^H Z^H (H P S P^H)
    Y = G.conj().T @ (Z.conj().T @ _core(H, P, weight_sum))
    for m in range(L - 1, l - 1, -1):
        Y = W[m].conj().T @ (phi[m].conj()[:, None] * Y)
    return -np.einsum("nt,nt->n", Y, C.conj()) / (4 * sigma2)


def grad_phase_rx(k: int, psi: Sequence[np.ndarray], U: Sequence[np.ndarray], G, B, H, P,
                  weight_sum, sigma2) -> np.ndarray:
    """Gradient w.r.t. the conjugate phases of receive layer ``k`` (1-based).

    Diagonal of ``(U^k)^H Upsilon^{k-1:1} H P S P^H B^H G^H Upsilon^{K:k+1}``
    scaled by ``-1 / (4 sigma^2)``.
    """
    K = len(U)
    if not 1 <= k <= K:
        raise IndexError(f"receive layer {k} outside 1..{K}")
    # left: (U^1 Psi^1 ... Psi^{k-1} U^k)^H applied to the kernel
    A = U[0]
    for m in range(1, k):
        A = (A * psi[m - 1][None, :]) @ U[m]
    left = A.conj().T @ _core(H, P, weight_sum)            # E x N_t
    # right: B^H G^H Upsilon^{K:k+1} = (U^{k+1} Psi^{k+1} ... U^K Psi^K G B)^H
    R = G @ B
    for m in range(K - 1, k - 1, -1):
        R = U[m] @ (psi[m][:, None] * R)
    return -np.einsum("et,et->e", left, R.conj()) / (4 * sigma2)


def gradient_bundle(point, W, U, G, cascades, d, diffs: DifferenceSet, sigma2) -> GradientBundle:
    """All block gradients at one design point (no block-by-block refresh)."""
    S = weighted_pair_sum(d, sigma2, diffs)
    H, P = cascades.H, point.P
    return GradientBundle(
        grad_precoder(H, P, S, sigma2),
        [grad_phase_tx(l, point.phi, W, G, cascades.Z, H, P, S, sigma2) for l in range(1, len(W) + 1)],
        [grad_phase_rx(k, point.psi, U, G, cascades.B, H, P, S, sigma2) for k in range(1, len(U) + 1)],
        S,
    )


def directional_fd_error(func: Callable[[np.ndarray], float], x: np.ndarray, grad: np.ndarray,
                         direction: np.ndarray, eps: float = 1e-6) -> float:
    """Relative mismatch between a central difference and ``4 eps Re<grad, dir>``.

    ``eps`` is scaled by the magnitude of ``x``.
    """
    h = eps * max(1.0, float(np.linalg.norm(x)))
    fd = func(x + h * direction) - func(x - h * direction)
    analytic = 4 * h * np.real(np.vdot(grad, direction))
    return abs(fd - analytic) / max(abs(fd), abs(analytic), np.finfo(float).tiny)
