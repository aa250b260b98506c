"""Cutoff-rate objective and a Monte-Carlo mutual information estimator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .signaling import DifferenceSet, TransmitVectorSet

__all__ = [
    "NoiseModel",
    "ObjectiveValue",
    "pair_distances",
    "pairwise_distances",
    "objective_from_pairs",
    "objective_f",
    "cutoff_rate",
    "draw_noise",
    "mutual_information_mc",
    "evaluate",
]

_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class NoiseModel:
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"noise variance must be positive, got {self.variance}")

    @classmethod
    def from_db(cls, sigma2_db: float) -> "NoiseModel":
        return cls(10 ** (sigma2_db / 10))

    @property
    def db(self) -> float:
        return 10 * np.log10(self.variance)


@dataclass(frozen=True)
class ObjectiveValue:
    f: float
    R0: float
    F: np.ndarray


def pair_distances(H: np.ndarray, P: np.ndarray, diffs: DifferenceSet) -> np.ndarray:
    """``||H P dx||^2`` for each stored unordered pair ``i < j``."""
    T = H @ P
    proj = diffs.deltas @ T.T
    return np.einsum("pk,pk->p", proj.real, proj.real) + np.einsum("pk,pk->p", proj.imag, proj.imag)


def pairwise_distances(H: np.ndarray, P: np.ndarray, diffs: DifferenceSet) -> np.ndarray:
    """Full symmetric ``N_vec x N_vec`` matrix ``F`` with a zero diagonal."""
    n = diffs.num_vectors
    F = np.zeros((n, n))
    d = pair_distances(H, P, diffs)
    F[diffs.first, diffs.second] = d
    F[diffs.second, diffs.first] = d
    return F


def objective_from_pairs(d: np.ndarray, sigma2: float, num_vectors: int) -> float:
    # diagonal pairs contribute exactly num_vectors; np.sum is pairwise summation
    return num_vectors + 2.0 * float(np.sum(np.exp(-d / (4 * sigma2))))


def objective_f(F: np.ndarray, sigma2: float) -> float:
    """``sum_{i,j} exp(-F_ij / (4 sigma^2))`` including the diagonal."""
    n = F.shape[0]
    iu = np.triu_indices(n, k=1)
    return objective_from_pairs(F[iu], sigma2, n)


def cutoff_rate(f: float, num_vectors: int) -> float:
    """Cutoff rate in bits, ``-log2(f / N_vec^2)``."""
    lo, hi = num_vectors, num_vectors**2
    if not (lo * (1 - _BOUND_SLACK) <= f <= hi * (1 + _BOUND_SLACK)):
        raise ValueError(f"objective {f!r} outside [{lo}, {hi}]; numerical corruption")
    return float(max(0.0, -np.log2(f / hi)))


def draw_noise(rng: np.random.Generator, num_vectors: int, num_samples: int, num_rx: int) -> np.ndarray:
    """Unit-variance circular Gaussian draws, shape ``(N_vec, S, N_r)``.

    Scaled by ``sqrt(sigma^2)`` inside the estimator, so the same draws can
    be reused across design points.
    """
    shape = (num_vectors, num_samples, num_rx)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def mutual_information_mc(H, P, vectors: TransmitVectorSet, sigma2: float,
                          rng: Optional[np.random.Generator] = None,
                          num_noise_samples: int = 1000,
                          noise: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """Monte-Carlo estimate of the discrete-input MI in bits and its standard error.

    Pass ``noise`` (from :func:`draw_noise`) to evaluate several design
    points on common random numbers; otherwise ``rng`` draws
    ``num_noise_samples`` per transmit vector.
    """
    X = vectors.vectors
    n_vec = X.shape[0]
    U = X @ (H @ P).T  # noiseless received points, (N_vec, N_r)
    if noise is None:
        if num_noise_samples < 1:
            raise ValueError("num_noise_samples must be >= 1")
        if rng is None:
            raise ValueError("either rng or noise must be given")
        noise = draw_noise(rng, n_vec, num_noise_samples, U.shape[1])
    S = noise.shape[1]
    sigma = np.sqrt(sigma2)

    per_vector_mean = np.empty(n_vec)
    per_vector_var = np.empty(n_vec)
    for i in range(n_vec):
        n = sigma * noise[i]                      # (S, N_r)
        D = U[i] - U                              # (N_vec, N_r)
        # -||D_j + n||^2 + ||n||^2 = -||D_j||^2 - 2 Re(D_j^H n)
        kappa = -(np.sum(np.abs(D) ** 2, axis=1)[None, :] + 2 * np.real(n @ D.conj().T)) / sigma2
        v = logsumexp(kappa, axis=1) / np.log(2)
        per_vector_mean[i] = v.mean()
        per_vector_var[i] = v.var(ddof=1) if S > 1 else 0.0
    mi = np.log2(n_vec) - per_vector_mean.mean()
    stderr = np.sqrt(per_vector_var.sum() / S) / n_vec
    return float(mi), float(stderr)


def evaluate(H, P, diffs: DifferenceSet, sigma2: float) -> ObjectiveValue:
    F = pairwise_distances(H, P, diffs)
    f = objective_f(F, sigma2)
    return ObjectiveValue(f, cutoff_rate(f, diffs.num_vectors), F)
