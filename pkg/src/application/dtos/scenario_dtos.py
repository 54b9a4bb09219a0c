"""Data transfer objects for scenarios and sweep results."""

import hashlib
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.domain.entities.array_config import ArrayConfig, FieldRegion
from src.domain.entities.dictionary import DictionaryKind


class DecoderKind(str, Enum):
    """Slot-wise JADCE decoders."""

    TURBO = "turbo"
    NTURBO = "nturbo"
    SOMP = "somp"
    TWOSTAGE = "twostage"


class SweepAxis(str, Enum):
    """Scenario fields a sweep can vary."""

    SNR = "snr"
    N_BLOCK = "n_block"
    J_BITS = "j_bits"
    DICT = "dict"


def _split_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


class ScenarioConfig(BaseModel):
    """One URA scenario: array, users, codebook, decoder and Monte Carlo size."""

    model_config = ConfigDict(frozen=True, use_enum_values=False, extra="forbid")

    # Array and propagation
    m_antennas: int = Field(64, ge=1)
    carrier_hz: float = Field(3e9, gt=0)
    field: FieldRegion = FieldRegion.NEAR
    l_paths: int = Field(2, ge=1)
    distance_min: float = Field(10.0, gt=0)
    distance_max: float = Field(20.0, gt=0)
    on_grid: bool = False

    # Users and codebook
    k_a: int = Field(20, ge=1)
    n_block: int = Field(16, ge=1)
    j_bits: int = Field(10, ge=1, le=20)
    s_slots: int = Field(4, ge=1)
    b_bits: Optional[int] = None
    allow_collisions: bool = True
    snr_db: List[float] = Field(default_factory=lambda: [10.0], min_length=1)

    # Dictionary
    dictionary: DictionaryKind = DictionaryKind.POLAR_PROPOSED
    gamma: float = Field(0.5816, gt=0, lt=1)
    beta: float = Field(1.2, gt=0)

    # Decoder
    decoder: DecoderKind = DecoderKind.TURBO
    k_max: Optional[int] = Field(None, ge=1)
    r_sparsity: Optional[int] = Field(None, ge=1)
    tau_sq: Optional[float] = Field(None, ge=0)
    max_iters: int = Field(50, ge=1)
    progress_tol: float = Field(1e-2, ge=0, lt=1)
    ad_threshold: Optional[float] = Field(None, ge=0)
    ad_threshold_factor: float = Field(0.1, gt=0)
    t_local: int = Field(3, ge=0)
    t_cyclic: int = Field(3, ge=0)
    newton_steps: int = Field(1, ge=0)
    per_row_sparsity: Optional[int] = Field(None, ge=1)

    # Stitching
    handle_collisions: bool = True
    max_sweeps: int = Field(20, ge=1)

    # Monte Carlo
    seeds: int = Field(100, ge=1)
    base_seed: int = Field(0, ge=0)

    @field_validator("snr_db", mode="before")
    @classmethod
    def _parse_snr(cls, value):
        return _split_list(value)

    @field_validator("distance_max")
    @classmethod
    def _check_range(cls, value, info):
        low = info.data.get("distance_min")
        if low is not None and value < low:
            raise ValueError(f"distance_max {value} < distance_min {low}")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        if self.b_bits is not None and self.b_bits != self.s_slots * self.j_bits:
            raise ValueError(
                f"b_bits={self.b_bits} must equal s_slots*j_bits={self.s_slots * self.j_bits}"
            )
        if self.n_block > 2**self.j_bits:
            raise ValueError(f"n_block={self.n_block} exceeds 2^j_bits={2**self.j_bits}")
        if self.field is FieldRegion.NEAR and not self.on_grid:
            array = self.array()
            if self.distance_min < array.fresnel_distance() or self.distance_max > array.rayleigh_distance():
                raise ValueError(
                    f"near-field distances must lie in [{array.fresnel_distance():.4g}, "
                    f"{array.rayleigh_distance():.4g}] m for M={self.m_antennas}"
                )
        return self

    @classmethod
    def desk(cls, **overrides) -> "ScenarioConfig":
        """Laptop-scale profile (M=64, K_a=20, N=16, J=10, S=4)."""
        return cls(**overrides)

    @classmethod
    def full(cls, **overrides) -> "ScenarioConfig":
        """Full-scale profile (M=128, K_a=100, J=14, N=30, S=7); long running."""
        values = dict(
            m_antennas=128,
            k_a=100,
            j_bits=14,
            n_block=30,
            s_slots=7,
            distance_min=30.0,
            distance_max=100.0,
            r_sparsity=400,
        )
        values.update(overrides)
        return cls(**values)

    def array(self) -> ArrayConfig:
        """Array geometry of the scenario."""
        return ArrayConfig.from_carrier(self.m_antennas, self.carrier_hz)

    @property
    def message_bits(self) -> int:
        """B = S·J."""
        return self.s_slots * self.j_bits

    def decoder_sparsity(self) -> int:
        """R: explicit value, else 2·k·L with k the (possibly overridden) user count."""
        if self.r_sparsity is not None:
            return self.r_sparsity
        return 2 * (self.k_max or self.k_a) * self.l_paths

    def scenario_hash(self) -> str:
        """Short digest identifying the configuration."""
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()[:12]


class ResultRow(BaseModel):
    """Aggregated sweep point."""

    model_config = ConfigDict(frozen=True)

    axis_value: str
    p_e_mean: float
    p_e_std: float
    nmse_mean_db: float
    iters_mean: float
    seconds_mean: float
    seeds: int

    @staticmethod
    def columns() -> List[str]:
        """CSV header."""
        return [
            "axis_value",
            "p_e_mean",
            "p_e_std",
            "nmse_mean_db",
            "iters_mean",
            "seconds_mean",
            "seeds",
        ]
