"""Spatially correlated Rayleigh channel between the transmit and receive SIM."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .geometry import LayerLayout, SimGeometry, build_layer_layout

__all__ = [
    "PathLossModel",
    "CorrelationPair",
    "ChannelRealization",
    "CORRELATION_MODELS",
    "path_loss_db",
    "path_gain_linear",
    "correlation_matrix",
    "psd_sqrt",
    "correlation_pair",
    "sample_channel",
]

PSD_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PathLossModel:
    reference_distance: float = 1.0
    exponent: float = 3.5
    wavelength: float = 0.05

    def __post_init__(self):
        if not self.reference_distance > 0:
            raise ValueError(f"reference_distance must be positive, got {self.reference_distance}")
        if not self.exponent > 0:
            raise ValueError(f"path loss exponent must be positive, got {self.exponent}")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")


def path_loss_db(model: PathLossModel, distance: float) -> float:
    """Log-distance path loss anchored to free space at the reference distance."""
    d0 = model.reference_distance
    if distance < d0:
        raise ValueError(f"distance {distance} m is below the reference distance {d0} m")
    return 20 * np.log10(4 * np.pi * d0 / model.wavelength) + 10 * model.exponent * np.log10(distance / d0)


def path_gain_linear(model: PathLossModel, distance: float) -> float:
    return 10 ** (-path_loss_db(model, distance) / 10)


def _pairwise_distance(layout: LayerLayout) -> np.ndarray:
    p = layout.positions
    diff = p[:, None, :] - p[None, :, :]
    return np.sqrt(np.einsum("mnk,mnk->mn", diff, diff))


def _sinc_correlation(layout: LayerLayout, wavelength: float) -> np.ndarray:
    # np.sinc is the normalized sin(pi x) / (pi x)
    R = np.sinc(2 * _pairwise_distance(layout) / wavelength)
    np.fill_diagonal(R, 1.0)
    return R


def _identity_correlation(layout: LayerLayout, wavelength: float) -> np.ndarray:
    return np.eye(len(layout))


CORRELATION_MODELS: Dict[str, Callable[[LayerLayout, float], np.ndarray]] = {
    "sinc": _sinc_correlation,
    "identity": _identity_correlation,
}


def correlation_matrix(layout: LayerLayout, wavelength: float, model: str = "sinc") -> np.ndarray:
    """Spatial correlation of a metasurface layer under isotropic scattering."""
    try:
        build = CORRELATION_MODELS[model]
    except KeyError:
        raise ValueError(
            f"unknown correlation model {model!r}; choose from {sorted(CORRELATION_MODELS)}"
        ) from None
    return build(layout, wavelength)


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues within ``1e-6 * max|eig|`` below zero are clamped to zero;
    anything more negative means the input is not PSD.
    """
    R = np.asarray(R)
    Rh = (R + R.conj().T) / 2
    eigval, eigvec = np.linalg.eigh(Rh)
    scale = max(np.max(np.abs(eigval)), 1.0)
    if eigval[0] < -PSD_TOLERANCE * scale:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {eigval[0]:.3e})")
    root = np.sqrt(np.clip(eigval, 0, None))
    S = (eigvec * root) @ eigvec.conj().T
    return (S + S.conj().T) / 2


@dataclass(frozen=True)
class CorrelationPair:
    R_T: np.ndarray
    R_R: np.ndarray
    sqrt_R_T: np.ndarray
    sqrt_R_R: np.ndarray

    @classmethod
    def from_matrices(cls, R_T, R_R):
        return cls(R_T, R_R, psd_sqrt(R_T), psd_sqrt(R_R))


def correlation_pair(geom: SimGeometry, model: str = "sinc") -> CorrelationPair:
    """Correlation of the outermost transmit and receive layers."""
    tx = build_layer_layout(geom.atoms_per_tx_layer, geom.atom_spacing)
    rx = build_layer_layout(geom.atoms_per_rx_layer, geom.atom_spacing)
    return CorrelationPair.from_matrices(
        correlation_matrix(tx, geom.wavelength, model),
        correlation_matrix(rx, geom.wavelength, model),
    )


@dataclass(frozen=True)
class ChannelRealization:
    G: np.ndarray
    path_gain_linear: float
    seed: Optional[int] = None


def sample_channel(rng: np.random.Generator, corr: CorrelationPair, path_gain: float,
                   seed: Optional[int] = None) -> ChannelRealization:
    """Draw ``G = R_R^{1/2} Gbar R_T^{1/2}`` with ``Gbar ~ CN(0, path_gain I)``.

    ``G`` is ``E x N``. ``seed`` is only recorded, sampling uses ``rng``.
    """
    if not path_gain >= 0:
        raise ValueError(f"path gain must be nonnegative, got {path_gain}")
    E, N = corr.R_R.shape[0], corr.R_T.shape[0]
    gbar = rng.standard_normal((E, N)) + 1j * rng.standard_normal((E, N))
    gbar *= np.sqrt(path_gain / 2)
    G = corr.sqrt_R_R @ gbar @ corr.sqrt_R_T
    return ChannelRealization(G, float(path_gain), seed)
