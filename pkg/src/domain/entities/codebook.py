"""Common codebook, fragmented messages and per-slot observations."""

from dataclasses import dataclass, field
from typing import FrozenSet

import numpy as np

from src.domain.exceptions import DimensionMismatchError


@dataclass(frozen=True)
class Codebook:
    """Partial-DFT common codebook A (N×2^J) with column norm √N."""

    matrix: np.ndarray = field(repr=False)
    n_block: int
    j_bits: int
    rows: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        """Check the matrix against the declared sizes."""
        if self.matrix.shape != (self.n_block, 2**self.j_bits):
            msg = f"codebook shape {self.matrix.shape} != ({self.n_block}, {2**self.j_bits})"
            raise DimensionMismatchError(msg)

    @property
    def size(self) -> int:
        """Number of codewords 2^J."""
        return 2**self.j_bits

    @property
    def column_norm(self) -> float:
        """Common column norm ‖a_j‖₂."""
        return float(np.sqrt(self.n_block))

    def unit_norm(self) -> np.ndarray:
        """Codebook rescaled to unit-norm columns."""
        return self.matrix / self.column_norm


@dataclass(frozen=True)
class MessageSet:
    """Active users' B-bit messages and their per-slot codeword indices.

    ``segments`` holds 1-based indices dec(m_k(s)) + 1.
    """

    bits: np.ndarray = field(repr=False)
    segments: np.ndarray = field(repr=False)
    j_bits: int

    @property
    def k_active(self) -> int:
        """Number of active users K_a."""
        return int(self.bits.shape[0])

    @property
    def s_slots(self) -> int:
        """Number of slots S."""
        return int(self.segments.shape[1])

    def messages(self) -> list[tuple[int, ...]]:
        """Messages as hashable bit tuples."""
        return [tuple(int(b) for b in row) for row in self.bits]

    def collision_count(self, slot: int) -> int:
        """Number of codewords reused by two or more users in a slot."""
        _, counts = np.unique(self.segments[:, slot], return_counts=True)
        return int(np.sum(counts > 1))


@dataclass(frozen=True)
class SlotObservation:
    """Received block of one slot plus the ground truth kept for scoring."""

    slot: int
    y: np.ndarray = field(repr=False)
    signal: np.ndarray = field(repr=False)
    user_columns: np.ndarray = field(repr=False)
    z_true: np.ndarray = field(repr=False)
    noise_var: float
    codebook_size: int

    @property
    def noise(self) -> np.ndarray:
        """Realized noise W = Y - AΞH."""
        return self.y - self.signal

    @property
    def true_active(self) -> FrozenSet[int]:
        """0-based codebook columns selected in this slot."""
        return frozenset(int(c) for c in self.user_columns)

    @property
    def true_xi(self) -> np.ndarray:
        """Binary 2^J × K_a slot selection matrix Ξ(s)."""
        xi = np.zeros((self.codebook_size, self.user_columns.shape[0]), dtype=np.int8)
        xi[self.user_columns, np.arange(self.user_columns.shape[0])] = 1
        return xi

    def true_rows(self) -> dict[int, np.ndarray]:
        """Spatial rows z_j of Z = ΞH keyed by active column."""
        return {j: self.z_true[i] for i, j in enumerate(sorted(self.true_active))}
