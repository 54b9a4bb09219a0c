"""Sparse-representation dictionary value objects."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.domain.exceptions import IndexRangeError

# polynomial coherence fit coefficients (read-only)
Q1 = 0.3917
Q2 = 0.001624


class DictionaryKind(str, Enum):
    """Supported dictionary constructions."""

    POLAR_PROPOSED = "polar_proposed"
    ANGULAR_DFT = "angular_dft"
    POLAR_BETA = "polar_beta"


@dataclass(frozen=True)
class PolarGrid:
    """Joint angle / distance-ring sampling grid of the proposed dictionary."""

    gamma: float
    p_theta: int
    p_phi: int
    thetas: np.ndarray = field(repr=False)
    ring_recips: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)

    @property
    def delta_theta(self) -> float:
        """Angle sampling interval."""
        if self.p_theta < 2:
            return 2.0
        return float(self.thetas[1] - self.thetas[0])

    @property
    def delta_ring(self) -> float:
        """Distance-ring reciprocal sampling interval."""
        # ring_recips[0] is half an interval
        return float(2 * self.ring_recips[0])


@dataclass(frozen=True)
class Dictionary:
    """M×P dictionary with per-column angle/distance metadata.

    Columns are stored ring-major: column ``ring * n_angles + angle``.
    Far-field atoms carry ``distance = inf``. Atoms closer than
    ``min_distance`` sit outside the Fresnel region the grid is designed for.
    """

    atoms: np.ndarray = field(repr=False)
    kind: DictionaryKind
    n_angles: int
    n_rings: int
    column_doas: np.ndarray = field(repr=False)
    column_distances: np.ndarray = field(repr=False)
    delta_theta: float
    delta_ring: float
    grid: Optional[PolarGrid] = None
    min_distance: float = 0.0

    @property
    def m_antennas(self) -> int:
        """Rows of the dictionary."""
        return int(self.atoms.shape[0])

    @property
    def n_columns(self) -> int:
        """Number of atoms P."""
        return int(self.atoms.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        """(M, P)."""
        return (self.m_antennas, self.n_columns)

    def column_of(self, angle: int, ring: int) -> int:
        """0-based column index of (angle, ring)."""
        if not (0 <= angle < self.n_angles and 0 <= ring < self.n_rings):
            msg = f"(angle={angle}, ring={ring}) outside {self.n_angles}x{self.n_rings} grid"
            raise IndexRangeError(msg)
        return ring * self.n_angles + angle

    def angle_ring_of(self, column: int) -> Tuple[int, int]:
        """Inverse of column_of."""
        if not 0 <= column < self.n_columns:
            msg = f"column {column} outside [0, {self.n_columns})"
            raise IndexRangeError(msg)
        ring, angle = divmod(column, self.n_angles)
        return angle, ring

    def ring_recip_of(self, column: int) -> float:
        """Distance-ring reciprocal (1-θ²)/d of a column, 0 for far-field atoms."""
        d = float(self.column_distances[column])
        if not np.isfinite(d):
            return 0.0
        theta = float(self.column_doas[column])
        return (1 - theta**2) / d
