"""Uniform linear array geometry and multipath channel value objects."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

from src.domain.exceptions import ParameterDomainError

SPEED_OF_LIGHT = 299_792_458.0


class FieldRegion(str, Enum):
    """Wavefront model used to synthesize a channel."""

    NEAR = "near"
    FAR = "far"


@dataclass(frozen=True)
class ArrayConfig:
    """Half-wavelength spaced ULA with M antennas."""

    m_antennas: int
    wavelength: float

    def __post_init__(self) -> None:
        """Validate geometry on creation."""
        if self.m_antennas < 1:
            msg = f"m_antennas must be positive, got {self.m_antennas}"
            raise ParameterDomainError(msg)
        if not self.wavelength > 0:
            msg = f"wavelength must be positive, got {self.wavelength}"
            raise ParameterDomainError(msg)

    @classmethod
    def from_carrier(cls, m_antennas: int, carrier_hz: float) -> "ArrayConfig":
        """Build an array from the carrier frequency instead of the wavelength."""
        if not carrier_hz > 0:
            msg = f"carrier_hz must be positive, got {carrier_hz}"
            raise ParameterDomainError(msg)
        return cls(m_antennas=m_antennas, wavelength=SPEED_OF_LIGHT / carrier_hz)

    @property
    def spacing(self) -> float:
        """Antenna spacing in meters (λc/2)."""
        return self.wavelength / 2

    @property
    def aperture(self) -> float:
        """Array aperture D = (M-1)·λc/2."""
        return (self.m_antennas - 1) * self.spacing

    def rayleigh_distance(self) -> float:
        """Near/far boundary ½(M-1)²λc."""
        return 0.5 * (self.m_antennas - 1) ** 2 * self.wavelength

    def fresnel_distance(self) -> float:
        """Lower edge of the radiating near field, 0.5·√(D³/λc)."""
        return 0.5 * math.sqrt(self.aperture**3 / self.wavelength)

    def kappa(self) -> np.ndarray:
        """Centered antenna offsets κ_m = (2m - M - 1)/2 for m = 1..M."""
        m = np.arange(1, self.m_antennas + 1, dtype=float)
        return (2 * m - self.m_antennas - 1) / 2


@dataclass(frozen=True)
class PathComponent:
    """One propagation path: complex gain, DoA θ = sin(ψ) and distance."""

    gain: complex
    doa: float
    distance: float

    def __post_init__(self) -> None:
        """Validate path parameters."""
        if not -1 < self.doa < 1:
            msg = f"doa must lie in (-1, 1), got {self.doa}"
            raise ParameterDomainError(msg)
        if not self.distance > 0:
            msg = f"distance must be positive, got {self.distance}"
            raise ParameterDomainError(msg)


@dataclass(frozen=True)
class PathSet:
    """Multipath parameters {(g_l, θ_l, d_l)} of one user."""

    paths: Tuple[PathComponent, ...]

    def __post_init__(self) -> None:
        """Require at least one path."""
        if len(self.paths) < 1:
            msg = "PathSet needs at least one path"
            raise ParameterDomainError(msg)

    @property
    def l_paths(self) -> int:
        """Number of paths L."""
        return len(self.paths)

    @classmethod
    def from_lists(
        cls, gains: List[complex], doas: List[float], distances: List[float]
    ) -> "PathSet":
        """Create from parallel lists."""
        return cls(
            tuple(
                PathComponent(complex(g), float(t), float(d))
                for g, t, d in zip(gains, doas, distances, strict=True)
            )
        )

    @classmethod
    def draw(
        cls,
        rng: np.random.Generator,
        l_paths: int,
        distance_range: Tuple[float, float],
        doa_range: Tuple[float, float] = (-1.0, 1.0),
    ) -> "PathSet":
        """Draw i.i.d. CN(0,1) gains with independent uniform DoAs and distances."""
        gains = (rng.standard_normal(l_paths) + 1j * rng.standard_normal(l_paths)) / math.sqrt(2)
        lo, hi = doa_range
        doas = rng.uniform(lo, hi, l_paths)
        # keep strictly inside the open interval
        doas = np.clip(doas, -1 + 1e-9, 1 - 1e-9)
        distances = rng.uniform(distance_range[0], distance_range[1], l_paths)
        return cls.from_lists(list(gains), list(doas), list(distances))


@dataclass(frozen=True)
class SpatialChannel:
    """Length-M spatial channel vector."""

    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        """Reject non-finite entries."""
        if self.coefficients.ndim != 1:
            msg = "channel coefficients must be a vector"
            raise ParameterDomainError(msg)
        if not np.all(np.isfinite(self.coefficients)):
            msg = "channel coefficients must be finite"
            raise ParameterDomainError(msg)

    @property
    def m_antennas(self) -> int:
        """Vector length."""
        return int(self.coefficients.shape[0])
