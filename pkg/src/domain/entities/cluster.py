"""Slot-wise recovered channels and modified K-medoids state."""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.domain.exceptions import DimensionMismatchError


@dataclass(frozen=True)
class SlotChannels:
    """Channels recovered in one slot with their 1-based codeword indices."""

    slot: int
    channels: Tuple[np.ndarray, ...] = field(repr=False)
    codeword_indices: Tuple[int, ...]

    def __post_init__(self) -> None:
        """Channels and indices are parallel lists."""
        if len(self.channels) != len(self.codeword_indices):
            msg = (
                f"slot {self.slot}: {len(self.channels)} channels vs "
                f"{len(self.codeword_indices)} codeword indices"
            )
            raise DimensionMismatchError(msg)

    @property
    def k_s(self) -> int:
        """Number of recovered channels K_s."""
        return len(self.channels)

    def matrix(self) -> np.ndarray:
        """Channels stacked as rows (K_s × M)."""
        if not self.channels:
            return np.zeros((0, 0), dtype=complex)
        return np.vstack(self.channels)


@dataclass(frozen=True)
class ClusterMember:
    """One channel assigned to a cluster; ``index`` is its position in the slot."""

    slot: int
    index: int
    channel: np.ndarray = field(repr=False)
    codeword_index: int


@dataclass
class ClusterState:
    """K̂_a medoids, the members of the current sweep and per-slot assignments."""

    k_hat: int
    medoids: List[np.ndarray] = field(repr=False)
    members: List[List[ClusterMember]] = field(default_factory=list, repr=False)
    assignments: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    @classmethod
    def initial(cls, seeds: List[np.ndarray]) -> "ClusterState":
        """Start from the channels of one slot as medoids."""
        return cls(
            k_hat=len(seeds),
            medoids=[np.asarray(s) for s in seeds],
            members=[[] for _ in seeds],
        )

    def reset_members(self) -> None:
        """Empty every cluster before a new sweep; medoids are kept."""
        self.members = [[] for _ in range(self.k_hat)]
        self.assignments = {}
        self.flags = []

    def assignment_key(self) -> Tuple[Tuple[int, Tuple[int, ...]], ...]:
        """Hashable snapshot of all slot assignments."""
        return tuple(sorted(self.assignments.items()))
