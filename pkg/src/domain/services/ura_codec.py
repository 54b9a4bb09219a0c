"""Message fragmentation, common-codebook encoding and slot transmission."""

import math
from typing import Tuple

import numpy as np
import structlog

from src.domain.entities.codebook import Codebook, MessageSet, SlotObservation
from src.domain.exceptions import (
    DimensionMismatchError,
    IndexRangeError,
    ParameterDomainError,
)

logger = structlog.get_logger(__name__)

# retries for the no-collision benchmark before giving up
_MAX_REDRAWS = 10_000


def bits_to_int(bits: np.ndarray) -> int:
    """dec(·) of a bit vector, MSB first."""
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def demap(index: int, j_bits: int) -> Tuple[int, ...]:
    """J bits b with dec(b) + 1 = index."""
    if not 1 <= index <= 2**j_bits:
        msg = f"codeword index {index} outside [1, {2**j_bits}]"
        raise IndexRangeError(msg)
    value = index - 1
    return tuple((value >> (j_bits - 1 - i)) & 1 for i in range(j_bits))


def split_and_encode(bits: np.ndarray, s_slots: int, j_bits: int) -> MessageSet:
    """Split every B-bit message into S segments of J bits."""
    bits = np.asarray(bits, dtype=np.int8)
    if bits.ndim != 2:
        msg = "bits must be a K_a × B matrix"
        raise DimensionMismatchError(msg)
    if bits.shape[1] != s_slots * j_bits:
        msg = f"message length {bits.shape[1]} != S·J = {s_slots * j_bits}"
        raise DimensionMismatchError(msg)
    if np.any((bits != 0) & (bits != 1)):
        msg = "bits must be binary"
        raise ParameterDomainError(msg)
    segments = np.empty((bits.shape[0], s_slots), dtype=np.int64)
    for k in range(bits.shape[0]):
        for s in range(s_slots):
            segments[k, s] = bits_to_int(bits[k, s * j_bits : (s + 1) * j_bits]) + 1
    return MessageSet(bits=bits, segments=segments, j_bits=j_bits)


class URACodec:
    """Common codebook and slot-wise transmit model Y = AΞ(s)H + W."""

    def __init__(self, n_block: int, j_bits: int, s_slots: int):
        """Initialize with block length N, bits per segment J and slot count S."""
        if n_block < 1 or j_bits < 1 or s_slots < 1:
            msg = f"N, J and S must be positive, got {n_block}, {j_bits}, {s_slots}"
            raise ParameterDomainError(msg)
        if n_block > 2**j_bits:
            msg = f"N={n_block} exceeds the 2^J={2**j_bits} DFT rows"
            raise ParameterDomainError(msg)
        self.n_block = n_block
        self.j_bits = j_bits
        self.s_slots = s_slots

    @property
    def b_bits(self) -> int:
        """Message length B = S·J."""
        return self.s_slots * self.j_bits

    def make_codebook(self, rng: np.random.Generator) -> Codebook:
        """N distinct rows of the 2^J-point DFT; entries have unit magnitude."""
        size = 2**self.j_bits
        rows = np.sort(rng.choice(size, size=self.n_block, replace=False))
        cols = np.arange(size)
        matrix = np.exp(-2j * math.pi * np.outer(rows, cols) / size)
        return Codebook(matrix=matrix, n_block=self.n_block, j_bits=self.j_bits, rows=rows)

    def draw_messages(
        self, rng: np.random.Generator, k_active: int, allow_collisions: bool = True
    ) -> MessageSet:
        """Uniform random messages; optionally re-drawn until no slot reuses a codeword."""
        for attempt in range(_MAX_REDRAWS):
            bits = rng.integers(0, 2, size=(k_active, self.b_bits), dtype=np.int8)
            msgs = split_and_encode(bits, self.s_slots, self.j_bits)
            if allow_collisions:
                return msgs
            if all(msgs.collision_count(s) == 0 for s in range(self.s_slots)):
                if attempt:
                    logger.debug("messages.redrawn", attempts=attempt + 1)
                return msgs
        msg = f"could not draw {k_active} collision-free messages with J={self.j_bits}"
        raise ParameterDomainError(msg)

    def transmit_slot(
        self,
        codebook: Codebook,
        msgs: MessageSet,
        slot: int,
        channels: np.ndarray,
        snr_db: float,
        rng: np.random.Generator,
    ) -> SlotObservation:
        """Superimpose the users' codewords on their channels and add AWGN.

        σ² is set from the realized signal so that E‖W‖² = ‖AΞH‖² / SNR.
        ``snr_db = inf`` disables the noise.
        """
        if not 0 <= slot < msgs.s_slots:
            msg = f"slot {slot} outside [0, {msgs.s_slots})"
            raise IndexRangeError(msg)
        channels = np.asarray(channels)
        if channels.ndim != 2 or channels.shape[0] != msgs.k_active:
            msg = f"channels shape {channels.shape} does not match K_a={msgs.k_active}"
            raise DimensionMismatchError(msg)

        user_columns = msgs.segments[:, slot] - 1
        signal = codebook.matrix[:, user_columns] @ channels
        n, m = signal.shape
        if math.isinf(snr_db) and snr_db > 0:
            noise_var = 0.0
            y = signal.copy()
        else:
            snr_lin = 10 ** (snr_db / 10)
            noise_var = float(np.linalg.norm(signal) ** 2 / (snr_lin * n * m))
            noise = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
            y = signal + math.sqrt(noise_var / 2) * noise

        active = np.unique(user_columns)
        z_true = np.zeros((active.shape[0], m), dtype=complex)
        for i, j in enumerate(active):
            z_true[i] = channels[user_columns == j].sum(axis=0)
        return SlotObservation(
            slot=slot,
            y=y,
            signal=signal,
            user_columns=user_columns,
            z_true=z_true,
            noise_var=noise_var,
            codebook_size=codebook.size,
        )
