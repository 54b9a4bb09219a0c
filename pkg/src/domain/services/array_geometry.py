"""Far-field and near-field ULA responses, channels and coherence."""

import math
from typing import Optional

import numpy as np

from src.domain.entities.array_config import (
    ArrayConfig,
    FieldRegion,
    PathSet,
    SpatialChannel,
)
from src.domain.exceptions import ParameterDomainError


def _check_doa(theta: float) -> None:
    if not -1 < theta < 1:
        msg = f"doa must lie in (-1, 1), got {theta}"
        raise ParameterDomainError(msg)


def far_response(cfg: ArrayConfig, theta: float) -> np.ndarray:
    """Plane-wave response (1/√M)·exp(jπmθ), m = 0..M-1."""
    _check_doa(theta)
    m = np.arange(cfg.m_antennas)
    return np.exp(1j * math.pi * m * theta) / math.sqrt(cfg.m_antennas)


def path_difference(cfg: ArrayConfig, theta: float, distance: float) -> np.ndarray:
    """d - d_m for every antenna.

    Evaluated as (dθκλ - κ²λ²/4)/(d + d_m), which stays accurate when d is
    many orders of magnitude larger than the aperture.
    """
    kappa = cfg.kappa()
    lam = cfg.wavelength
    num = distance * theta * kappa * lam - (kappa * lam) ** 2 / 4
    d_m = np.sqrt(distance**2 - num)
    return num / (distance + d_m)


def near_response(cfg: ArrayConfig, theta: float, distance: float) -> np.ndarray:
    """Spherical-wave response (1/√M)·exp(j(2π/λ)(d - d_m))."""
    _check_doa(theta)
    if not distance > 0:
        msg = f"distance must be positive, got {distance}"
        raise ParameterDomainError(msg)
    k = 2 * math.pi / cfg.wavelength
    phase = k * path_difference(cfg, theta, distance)
    return np.exp(1j * phase) / math.sqrt(cfg.m_antennas)


def response(cfg: ArrayConfig, theta: float, distance: Optional[float]) -> np.ndarray:
    """Near-field response, or the far-field one when distance is None or inf."""
    if distance is None or not math.isfinite(distance):
        return far_response(cfg, theta)
    return near_response(cfg, theta, distance)


def synth_channel(
    cfg: ArrayConfig, paths: PathSet, field: FieldRegion = FieldRegion.NEAR
) -> SpatialChannel:
    """h = √(M/L)·Σ g_l e(θ_l[, d_l])."""
    h = np.zeros(cfg.m_antennas, dtype=complex)
    for path in paths.paths:
        if field is FieldRegion.FAR:
            e = far_response(cfg, path.doa)
        else:
            e = near_response(cfg, path.doa, path.distance)
        h += path.gain * e
    h *= math.sqrt(cfg.m_antennas / paths.l_paths)
    return SpatialChannel(h)


def coherence(
    cfg: ArrayConfig, theta: float, distance: float, theta2: float, distance2: float
) -> float:
    """|e(θ', d')ᴴ e(θ, d)| from exact responses."""
    a = near_response(cfg, theta, distance)
    b = near_response(cfg, theta2, distance2)
    return float(min(1.0, abs(np.vdot(b, a))))


def angular_spread(cfg: ArrayConfig, h: np.ndarray, threshold: float = 0.01) -> int:
    """Number of angular-DFT bins holding more than ``threshold`` of the energy."""
    h = np.asarray(h)
    if h.shape != (cfg.m_antennas,):
        msg = f"channel length {h.shape} != ({cfg.m_antennas},)"
        raise ParameterDomainError(msg)
    total = float(np.vdot(h, h).real)
    if total == 0:
        return 0
    m = np.arange(cfg.m_antennas)
    grid = (2 * m - cfg.m_antennas + 1) / cfg.m_antennas
    u = np.exp(1j * math.pi * np.outer(m, grid)) / math.sqrt(cfg.m_antennas)
    energy = np.abs(u.conj().T @ h) ** 2 / total
    return int(np.sum(energy > threshold))
