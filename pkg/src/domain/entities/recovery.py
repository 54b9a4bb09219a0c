"""Sparse recovery configuration, state and result objects."""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from scipy import sparse

from src.domain.exceptions import ParameterDomainError

SupportEntry = Tuple[int, int]


@dataclass(frozen=True)
class RecoveryConfig:
    """Inputs of the CoSaMP-family decoders.

    ``k_a`` may be the true number of active users or a K_max override.
    ``ad_threshold`` of None selects the median-relative rule. An iteration
    lowering ‖R‖² by less than ``progress_tol`` of its previous value ends the
    run as a stall.
    """

    k_a: int
    r_sparsity: int
    tau_sq: float
    max_iters: int = 50
    ad_threshold: Optional[float] = None
    ad_threshold_factor: float = 0.1
    progress_tol: float = 1e-2

    def __post_init__(self) -> None:
        """Validate positivity."""
        if self.k_a < 1 or self.r_sparsity < 1:
            msg = f"k_a and r_sparsity must be positive, got {self.k_a}, {self.r_sparsity}"
            raise ParameterDomainError(msg)
        if self.max_iters < 1:
            msg = f"max_iters must be >= 1, got {self.max_iters}"
            raise ParameterDomainError(msg)
        if not 0 <= self.progress_tol < 1:
            msg = f"progress_tol must lie in [0, 1), got {self.progress_tol}"
            raise ParameterDomainError(msg)
        if self.tau_sq < 0:
            msg = f"tau_sq must be non-negative, got {self.tau_sq}"
            raise ParameterDomainError(msg)
        if self.ad_threshold is not None and self.ad_threshold < 0:
            msg = f"ad_threshold must be non-negative, got {self.ad_threshold}"
            raise ParameterDomainError(msg)

    @staticmethod
    def stopping_power(y: np.ndarray, snr_linear: float) -> float:
        """Default target residual power τ² = ‖Y‖²_F / (5(SNR + 1))."""
        return float(np.linalg.norm(y) ** 2 / (5 * (snr_linear + 1)))

    @staticmethod
    def desk_sparsity(k_a: int, l_paths: int) -> int:
        """Desk-scale sparsity level R = 2·K_a·L."""
        return 2 * k_a * l_paths


@dataclass
class RecoveryState:
    """Iterate of Turbo-CoSaMP: residual, supports and retained coefficients."""

    residual: np.ndarray = field(repr=False)
    row_support: Tuple[int, ...] = ()
    support: Tuple[SupportEntry, ...] = ()
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex), repr=False)

    @property
    def residual_power(self) -> float:
        """‖R‖²_F."""
        return float(np.linalg.norm(self.residual) ** 2)

    def estimate(self, n_codewords: int, n_columns: int) -> sparse.coo_array:
        """Sparse X̂ of shape 2^J × P."""
        if not self.support:
            return sparse.coo_array((n_codewords, n_columns), dtype=complex)
        rows = np.fromiter((j for j, _ in self.support), dtype=int)
        cols = np.fromiter((p for _, p in self.support), dtype=int)
        return sparse.coo_array(
            (self.coefficients, (rows, cols)), shape=(n_codewords, n_columns)
        )

    def row_energies(self) -> Dict[int, float]:
        """‖x̂_j‖² for every row in the row support."""
        energy = {j: 0.0 for j in self.row_support}
        for (j, _), x in zip(self.support, self.coefficients):
            energy[j] = energy.get(j, 0.0) + float(abs(x) ** 2)
        return energy


@dataclass
class RecoveryResult:
    """Decoder output shared by all JADCE decoders."""

    active_set: FrozenSet[int]
    z_rows: Dict[int, np.ndarray] = field(repr=False)
    iterations: int
    converged: bool
    residual_history: List[float] = field(default_factory=list, repr=False)
    estimate: Optional[sparse.coo_array] = field(default=None, repr=False)
    atoms: Optional[list] = field(default=None, repr=False)
    flags: List[str] = field(default_factory=list)

    @property
    def residual_power(self) -> float:
        """Final ‖R‖²_F."""
        return self.residual_history[-1] if self.residual_history else float("nan")
