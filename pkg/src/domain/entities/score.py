"""Per-trial score value object."""

from dataclasses import dataclass, field
from typing import List


@dataclass(frozen=True)
class TrialScore:
    """Error rate, channel NMSE and rate figures of one URA frame."""

    p_e: float
    nmse: float
    eb_n0_db: float
    spectral_eff: float
    iterations: float
    nmse_per_slot: List[float] = field(default_factory=list)
    seconds: float = float("nan")
    converged: bool = True
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        """Convert score to dictionary."""
        return {
            "p_e": self.p_e,
            "nmse": self.nmse,
            "eb_n0_db": self.eb_n0_db,
            "spectral_eff": self.spectral_eff,
            "iterations": self.iterations,
            "nmse_per_slot": list(self.nmse_per_slot),
            "seconds": self.seconds,
            "converged": self.converged,
            "flags": list(self.flags),
        }
