"""Modified K-medoids stitching of slot-wise channels into messages."""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment

from src.domain.entities.cluster import ClusterMember, ClusterState, SlotChannels
from src.domain.exceptions import DimensionMismatchError, ParameterDomainError
from src.domain.services.ura_codec import demap

logger = structlog.get_logger(__name__)

Message = Tuple[int, ...]
MAX_SWEEPS = 20


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Binary n×n assignment V minimizing Σ c·v."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        msg = f"hungarian needs a square cost matrix, got shape {cost.shape}"
        raise DimensionMismatchError(msg)
    if not np.all(np.isfinite(cost)):
        msg = "cost matrix must be finite"
        raise ParameterDomainError(msg)
    if cost.size and cost.min() < 0:
        cost = cost - cost.min()
    rows, cols = linear_sum_assignment(cost)
    v = np.zeros(cost.shape, dtype=np.int8)
    v[rows, cols] = 1
    return v


def distance_matrix(channels: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    """C[i, k] = ‖h_i - n_k‖₂."""
    return np.linalg.norm(channels[:, None, :] - medoids[None, :, :], axis=2)


def update_medoid(members: Sequence[ClusterMember]) -> np.ndarray:
    """Member with the smallest distance sum to the others; earliest (slot, index) on ties."""
    if not members:
        msg = "cannot pick a medoid of an empty cluster"
        raise ParameterDomainError(msg)
    ordered = sorted(members, key=lambda m: (m.slot, m.index))
    points = np.vstack([m.channel for m in ordered])
    totals = distance_matrix(points, points).sum(axis=1)
    return ordered[int(np.argmin(totals))].channel


def _farthest(cost: np.ndarray, count: int) -> List[int]:
    """Rows with the largest distance to their nearest medoid."""
    nearest = cost.min(axis=1)
    return [int(i) for i in np.argsort(-nearest, kind="stable")[:count]]


class ChannelClusterer:
    """Per-slot constrained assignment of channels to K̂_a medoids."""

    def __init__(
        self,
        j_bits: int,
        max_sweeps: int = MAX_SWEEPS,
        handle_collisions: bool = True,
        k_hat: Optional[int] = None,
    ):
        """Initialize with segment width J and the stitching options."""
        if max_sweeps < 1:
            msg = f"max_sweeps must be >= 1, got {max_sweeps}"
            raise ParameterDomainError(msg)
        self.j_bits = j_bits
        self.max_sweeps = max_sweeps
        self.handle_collisions = handle_collisions
        self.k_hat = k_hat

    def assign_slot(self, state: ClusterState, slot_data: SlotChannels) -> ClusterState:
        """Attach one slot's channels to the clusters and refresh the medoids."""
        if slot_data.k_s == 0 or state.k_hat == 0:
            state.assignments[slot_data.slot] = tuple([-1] * state.k_hat)
            return state
        channels = slot_data.matrix()
        medoids = np.vstack(state.medoids)
        if channels.shape[1] != medoids.shape[1]:
            msg = f"channel length {channels.shape[1]} != medoid length {medoids.shape[1]}"
            raise DimensionMismatchError(msg)
        cost = distance_matrix(channels, medoids)
        rows = list(range(slot_data.k_s))

        if slot_data.k_s > state.k_hat:
            dropped = set(_farthest(cost, slot_data.k_s - state.k_hat))
            rows = [i for i in rows if i not in dropped]
            flag = f"slot {slot_data.slot}: dropped {len(dropped)} channels"
            state.flags.append(flag)
            logger.warning("cluster.drop", slot=slot_data.slot, dropped=len(dropped))
        elif slot_data.k_s < state.k_hat and self.handle_collisions:
            missing = state.k_hat - slot_data.k_s
            far = _farthest(cost, slot_data.k_s)
            rows = rows + [far[i % len(far)] for i in range(missing)]

        sub = cost[rows]
        if sub.shape[0] == sub.shape[1]:
            v = hungarian(sub)
            picks = [(rows[i], int(np.flatnonzero(v[i])[0])) for i in range(len(rows))]
        else:
            r_idx, c_idx = linear_sum_assignment(sub)
            picks = [(rows[int(i)], int(k)) for i, k in zip(r_idx, c_idx)]

        owner = [-1] * state.k_hat
        for i, k in picks:
            owner[k] = i
            state.members[k].append(
                ClusterMember(
                    slot=slot_data.slot,
                    index=i,
                    channel=slot_data.channels[i],
                    codeword_index=slot_data.codeword_indices[i],
                )
            )
        state.assignments[slot_data.slot] = tuple(owner)
        for k in range(state.k_hat):
            if state.members[k]:
                state.medoids[k] = update_medoid(state.members[k])
        return state

    def initial_state(self, slots: Sequence[SlotChannels]) -> ClusterState:
        """Medoids from the slot holding the most channels."""
        sizes = [s.k_s for s in slots]
        seed_slot = slots[int(np.argmax(sizes))]
        seeds = list(seed_slot.channels)
        if self.k_hat is not None and self.k_hat < len(seeds):
            seeds = seeds[: self.k_hat]
        return ClusterState.initial(seeds)

    def decode(self, slots: Sequence[SlotChannels]) -> Tuple[List[Message], ClusterState]:
        """Sweep all slots until the assignments repeat; emit complete clusters."""
        if not slots or max(s.k_s for s in slots) == 0:
            return [], ClusterState.initial([])
        state = self.initial_state(slots)
        seen = set()
        previous = None
        for sweep in range(1, self.max_sweeps + 1):
            state.reset_members()
            for slot_data in slots:
                self.assign_slot(state, slot_data)
            key = state.assignment_key()
            if key == previous or key in seen:
                logger.debug("cluster.stable", sweeps=sweep, repeated=key != previous)
                break
            seen.add(key)
            previous = key
        else:
            logger.debug("cluster.sweep_cap", sweeps=self.max_sweeps)
        return self._messages(state, [s.slot for s in slots]), state

    def _messages(self, state: ClusterState, slot_ids: List[int]) -> List[Message]:
        messages: List[Message] = []
        for members in state.members:
            by_slot: Dict[int, ClusterMember] = {m.slot: m for m in members}
            if any(s not in by_slot for s in slot_ids):
                continue
            bits: List[int] = []
            for s in slot_ids:
                bits.extend(demap(by_slot[s].codeword_index, self.j_bits))
            messages.append(tuple(bits))
        return messages


def cluster_decode(
    slots: Sequence[SlotChannels],
    j_bits: int,
    handle_collisions: bool = True,
    k_hat: Optional[int] = None,
) -> List[Message]:
    """Message list recovered from slot-wise channels."""
    messages, _ = ChannelClusterer(
        j_bits, handle_collisions=handle_collisions, k_hat=k_hat
    ).decode(slots)
    return messages
