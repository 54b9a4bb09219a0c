"""Error rate, channel NMSE, rate figures and empirical RIP estimation."""

import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.domain.exceptions import ParameterDomainError

Message = Tuple[int, ...]


def per_user_error(decoded: Iterable[Message], truth: Sequence[Message]) -> float:
    """Misdetection rate plus the false-alarm share of the decoded list.

    The false-alarm term is 0 for an empty list.
    """
    if not truth:
        msg = "truth must hold at least one message"
        raise ParameterDomainError(msg)
    listed = set(decoded)
    sent = set(truth)
    missed = sum(1 for m in truth if m not in listed) / len(truth)
    false_alarm = len(listed - sent) / len(listed) if listed else 0.0
    return missed + false_alarm


def nmse(
    z_hat: Mapping[int, np.ndarray],
    z_true: Mapping[int, np.ndarray],
    active: Optional[Iterable[int]] = None,
) -> float:
    """Σ‖ẑ_j - z_j‖² / Σ‖z_j‖² over the true active rows; NaN if the truth is zero."""
    rows = sorted(z_true) if active is None else sorted(active)
    num = 0.0
    den = 0.0
    for j in rows:
        z = np.asarray(z_true[j])
        est = z_hat.get(j)
        err = z if est is None else z - est
        num += float(np.vdot(err, err).real)
        den += float(np.vdot(z, z).real)
    if den == 0:
        return math.nan
    return num / den


def eb_n0_db(s_slots: int, n_block: int, b_bits: int, noise_var: float) -> float:
    """E_b/N_0 = S‖a_j‖²/(Bσ²) = SN/(Bσ²) in dB."""
    if noise_var <= 0:
        return math.inf
    return 10 * math.log10(s_slots * n_block / (b_bits * noise_var))


def spectral_efficiency(b_bits: int, k_active: int, s_slots: int, n_block: int) -> float:
    """B·K_a/(S·N) bits per channel use."""
    return b_bits * k_active / (s_slots * n_block)


def rip_estimate(
    a: np.ndarray,
    b: np.ndarray,
    sparsity: int,
    trials: int = 100,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Largest |‖AXBᵀ‖²/‖X‖² - 1| over random r-sparse X.

    A lower bound of the true restricted isometry constant; A and B are used
    as given.
    """
    if trials < 1 or sparsity < 1:
        msg = f"trials and sparsity must be positive, got {trials}, {sparsity}"
        raise ParameterDomainError(msg)
    rng = rng or np.random.default_rng(0)
    n_rows, n_cols = a.shape[1], b.shape[1]
    size = n_rows * n_cols
    r = min(sparsity, size)
    worst = 0.0
    for _ in range(trials):
        flat = rng.choice(size, size=r, replace=False)
        js, ps = np.divmod(flat, n_cols)
        x = (rng.standard_normal(r) + 1j * rng.standard_normal(r)) / math.sqrt(2)
        y = (a[:, js] * x) @ b[:, ps].T
        ratio = float(np.linalg.norm(y) ** 2 / np.linalg.norm(x) ** 2)
        worst = max(worst, abs(ratio - 1))
    return worst


def rip_measurement_bound(r: int, j_bits: int, p_theta: int, epsilon: float) -> float:
    """Measurement count N·M above which E{δ_r} < ε is guaranteed.

    q·ln(q)·ln²(r) with q = r·ln(2^J·P_θ)/ε².
    """
    if not 0 < epsilon < 1:
        msg = f"epsilon must lie in (0, 1), got {epsilon}"
        raise ParameterDomainError(msg)
    q = r * (j_bits * math.log(2) + math.log(p_theta)) / epsilon**2
    return q * math.log(q) * math.log(r) ** 2


def mean_std(values: Sequence[float]) -> Dict[str, float]:
    """Mean and population standard deviation ignoring NaNs."""
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return {"mean": math.nan, "std": math.nan}
    return {"mean": float(arr.mean()), "std": float(arr.std())}
