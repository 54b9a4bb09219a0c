"""Continuous-parameter atoms for off-grid refinement."""

from dataclasses import dataclass, replace

from src.domain.exceptions import ParameterDomainError

THETA_MARGIN = 1e-6
MAX_DISTANCE = 1e7


@dataclass(frozen=True)
class AtomParam:
    """Atom g·a_j·e_nᵀ(θ, d) with 0-based codeword column j."""

    gain: complex
    codeword: int
    doa: float
    distance: float

    def __post_init__(self) -> None:
        """Validate the parameter domain."""
        if not -1 < self.doa < 1:
            msg = f"doa must lie in (-1, 1), got {self.doa}"
            raise ParameterDomainError(msg)
        if not self.distance > 0:
            msg = f"distance must be positive, got {self.distance}"
            raise ParameterDomainError(msg)

    def with_gain(self, gain: complex) -> "AtomParam":
        """Copy with a new gain."""
        return replace(self, gain=complex(gain))

    def moved(self, doa: float, distance: float) -> "AtomParam":
        """Copy with new (θ, d)."""
        return replace(self, doa=float(doa), distance=float(distance))

    def ring_recip(self) -> float:
        """(1-θ²)/d."""
        return (1 - self.doa**2) / self.distance


@dataclass(frozen=True)
class RefineConfig:
    """Newtonized refinement rounds: local T_l, cyclic T_c, Newton steps T_N."""

    t_local: int = 3
    t_cyclic: int = 3
    newton_steps: int = 1

    def __post_init__(self) -> None:
        """All counts are non-negative."""
        if min(self.t_local, self.t_cyclic, self.newton_steps) < 0:
            msg = "refinement counts must be >= 0"
            raise ParameterDomainError(msg)
