"""Physical layout of a SIM-based holographic MIMO link.

Coordinates are in meters. Every metasurface layer is parallel to the
xy-plane and centered on the z-axis. The transmit antennas sit at z = 0,
transmit layer ``l`` at ``z = l * layer_spacing``, the receive antennas at
``z = d`` and receive layer ``k`` at ``z = d - k * layer_spacing``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 2.998e8  # m/s, the rounded value used for frequency configs

__all__ = [
    "SPEED_OF_LIGHT",
    "GeometryError",
    "SimGeometry",
    "LayerLayout",
    "PropagationMatrix",
    "Propagation",
    "build_layer_layout",
    "build_antenna_layout",
    "rs_coefficient",
    "build_propagation_matrix",
    "build_all_propagation",
    "wavelength_from_frequency",
]


class GeometryError(ValueError):
    """Raised for physically inconsistent layouts."""


def wavelength_from_frequency(frequency: float) -> float:
    if frequency <= 0:
        raise GeometryError(f"frequency must be positive, got {frequency}")
    return SPEED_OF_LIGHT / frequency


def _perfect_square_side(count: int) -> int:
    side = math.isqrt(count) if count >= 0 else -1
    if count < 1 or side * side != count:
        raise GeometryError(
            f"element count {count} is not a perfect square; meta-atoms are "
            "arranged in a square grid"
        )
    return side


@dataclass(frozen=True)
class SimGeometry:
    """Full physical description of both SIM stacks and antenna arrays.

    Spacings and the meta-atom area default to the half-wavelength layout
    (``lambda/2`` spacings, ``A = lambda**2 / 4``) when left as ``None``.
    """

    wavelength: float = 0.05
    num_tx_antennas: int = 2
    num_rx_antennas: int = 2
    atoms_per_tx_layer: int = 49
    atoms_per_rx_layer: int = 49
    tx_layers: int = 4
    rx_layers: int = 4
    layer_spacing: Optional[float] = None
    antenna_spacing: Optional[float] = None
    atom_spacing: Optional[float] = None
    atom_area: Optional[float] = None
    link_distance: float = 300.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise GeometryError(f"wavelength must be positive, got {self.wavelength}")
        half = self.wavelength / 2
        for name in ("layer_spacing", "antenna_spacing", "atom_spacing"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, half)
        if self.atom_area is None:
            object.__setattr__(self, "atom_area", self.wavelength**2 / 4)

        for name in ("num_tx_antennas", "num_rx_antennas", "atoms_per_tx_layer",
                     "atoms_per_rx_layer", "tx_layers", "rx_layers"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise GeometryError(f"{name} must be an integer >= 1, got {value}")
        for name in ("layer_spacing", "antenna_spacing", "atom_spacing", "atom_area"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be positive, got {getattr(self, name)}")
        _perfect_square_side(self.atoms_per_tx_layer)
        _perfect_square_side(self.atoms_per_rx_layer)
        depth = (self.tx_layers + self.rx_layers) * self.layer_spacing
        if not self.link_distance > depth:
            raise GeometryError(
                f"link_distance {self.link_distance} m does not clear the two SIM "
                f"stacks ({depth} m deep in total)"
            )

    def tx_layer_z(self, l: int) -> float:
        return l * self.layer_spacing

    def rx_layer_z(self, k: int) -> float:
        return self.link_distance - k * self.layer_spacing


@dataclass(frozen=True)
class LayerLayout:
    """Element positions of one planar array, shape ``(count, 3)``."""

    positions: np.ndarray
    normal_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __len__(self):
        return self.positions.shape[0]

    @property
    def z(self) -> float:
        return float(self.positions[0, 2])


@dataclass(frozen=True)
class PropagationMatrix:
    entries: np.ndarray
    source: LayerLayout
    dest: LayerLayout


@dataclass(frozen=True)
class Propagation:
    """The ``W^1..W^L`` and ``U^1..U^K`` matrices of a geometry (0-indexed lists)."""

    W: List[np.ndarray]
    U: List[np.ndarray]


def build_layer_layout(count: int, spacing: float, center: Sequence[float] = (0.0, 0.0, 0.0)) -> LayerLayout:
    """Square ``sqrt(count) x sqrt(count)`` grid in a plane of constant z.

    Elements are ordered row-major with x varying fastest.
    """
    side = _perfect_square_side(count)
    if not spacing > 0:
        raise GeometryError(f"spacing must be positive, got {spacing}")
    cx, cy, cz = (float(c) for c in center)
    offsets = (np.arange(side) - (side - 1) / 2) * spacing
    X, Y = np.meshgrid(cx + offsets, cy + offsets, indexing="xy")
    positions = np.column_stack([X.ravel(), Y.ravel(), np.full(count, cz)])
    return LayerLayout(positions)


def build_antenna_layout(count: int, spacing: float, center: Sequence[float] = (0.0, 0.0, 0.0)) -> LayerLayout:
    """Uniform linear array along x, centered at ``center``."""
    if int(count) != count or count < 1:
        raise GeometryError(f"antenna count must be >= 1, got {count}")
    if not spacing > 0:
        raise GeometryError(f"spacing must be positive, got {spacing}")
    cx, cy, cz = (float(c) for c in center)
    offsets = (np.arange(count) - (count - 1) / 2) * spacing
    positions = np.column_stack([cx + offsets, np.full(count, cy), np.full(count, cz)])
    return LayerLayout(positions)


def rs_coefficient(area, distance, cos_angle, wavelength):
    """Rayleigh-Sommerfeld coupling between two elements.

    ``(A cos(chi) / d) * (1 / (2 pi d) - j / lambda) * exp(j 2 pi d / lambda)``;
    broadcasts over array arguments.
    """
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise GeometryError("propagation distance must be positive (coincident elements)")
    if wavelength <= 0 or area <= 0:
        raise GeometryError("area and wavelength must be positive")
    cos_angle = np.asarray(cos_angle, dtype=float)
    return (
        (area * cos_angle / distance)
        * (1 / (2 * np.pi * distance) - 1j / wavelength)
        * np.exp(1j * 2 * np.pi * distance / wavelength)
    )


def build_propagation_matrix(source: LayerLayout, dest: LayerLayout, area: float, wavelength: float) -> PropagationMatrix:
    """Entry ``(m, n)`` couples source element ``n`` into destination element ``m``."""
    src, dst = source.positions, dest.positions
    if np.ptp(src[:, 2]) > 0 or np.ptp(dst[:, 2]) > 0:
        raise GeometryError("layouts must each lie in a plane of constant z")
    dz = abs(dst[0, 2] - src[0, 2])
    if dz == 0:
        raise GeometryError("source and destination layers lie in the same plane")
    diff = dst[:, None, :] - src[None, :, :]
    distance = np.sqrt(np.einsum("mnk,mnk->mn", diff, diff))
    entries = rs_coefficient(area, distance, dz / distance, wavelength)
    return PropagationMatrix(entries, source, dest)


def build_all_propagation(geom: SimGeometry) -> Propagation:
    """All inter-layer matrices of both SIM stacks.

    ``W[0]`` is ``N x N_t`` and ``U[0]`` is ``N_r x E``. Inner layers share one
    arrangement, so ``W[1:]`` (and ``U[1:]``) reference a single array.
    """
    lam, area = geom.wavelength, geom.atom_area
    tx_ant = build_antenna_layout(geom.num_tx_antennas, geom.antenna_spacing, (0, 0, 0))
    rx_ant = build_antenna_layout(geom.num_rx_antennas, geom.antenna_spacing, (0, 0, geom.link_distance))

    tx1 = build_layer_layout(geom.atoms_per_tx_layer, geom.atom_spacing, (0, 0, geom.tx_layer_z(1)))
    W = [build_propagation_matrix(tx_ant, tx1, area, lam).entries]
    if geom.tx_layers > 1:
        tx2 = build_layer_layout(geom.atoms_per_tx_layer, geom.atom_spacing, (0, 0, geom.tx_layer_z(2)))
        inner = build_propagation_matrix(tx1, tx2, area, lam).entries
        inner.setflags(write=False)
        W.extend([inner] * (geom.tx_layers - 1))

    rx1 = build_layer_layout(geom.atoms_per_rx_layer, geom.atom_spacing, (0, 0, geom.rx_layer_z(1)))
    U = [build_propagation_matrix(rx1, rx_ant, area, lam).entries]
    if geom.rx_layers > 1:
        rx2 = build_layer_layout(geom.atoms_per_rx_layer, geom.atom_spacing, (0, 0, geom.rx_layer_z(2)))
        inner = build_propagation_matrix(rx2, rx1, area, lam).entries
        inner.setflags(write=False)
        U.extend([inner] * (geom.rx_layers - 1))

    return Propagation(W, U)
