"""Factory for the polar-domain, angular-DFT and β-controlled dictionaries."""

import math
from typing import Optional

import numpy as np
import structlog

from src.domain.entities.array_config import ArrayConfig
from src.domain.entities.dictionary import (
    Q1,
    Q2,
    Dictionary,
    DictionaryKind,
    PolarGrid,
)
from src.domain.exceptions import DictionaryConstructionError, ParameterDomainError
from src.domain.services.array_geometry import (
    far_response,
    near_response,
    path_difference,
)

logger = structlog.get_logger(__name__)

# absorbs rounding when 2M√(q1/(1-γ)) lands on an integer
_FLOOR_EPS = 1e-9


def _stable_floor(x: float) -> int:
    return int(math.floor(x + _FLOOR_EPS))


def dft_doas(m_antennas: int) -> np.ndarray:
    """Angular-DFT grid (2(m-1) - M + 1)/M for m = 1..M."""
    m = np.arange(m_antennas)
    return (2 * m - m_antennas + 1) / m_antennas


class DictionaryFactory:
    """Build dictionaries B and their grid metadata."""

    @staticmethod
    def polar_grid(cfg: ArrayConfig, gamma: float) -> PolarGrid:
        """Joint angle / distance-ring sampling for maximum coherence γ."""
        if not 0 < gamma < 1:
            msg = f"gamma must lie in (0, 1), got {gamma}"
            raise ParameterDomainError(msg)
        m = cfg.m_antennas
        p_theta = _stable_floor(2 * m * math.sqrt(Q1 / (1 - gamma)))
        p_phi = _stable_floor(4 * math.sqrt(2 * m * Q2 / (1 - gamma)))
        if p_phi == 0:
            bound = 1 - 32 * m * Q2
            msg = (
                f"gamma={gamma} gives no distance ring for M={m}; "
                f"need gamma <= {bound:.6f}"
            )
            raise DictionaryConstructionError(msg)
        if p_theta == 0:
            msg = f"gamma={gamma} gives no angle sample for M={m}"
            raise DictionaryConstructionError(msg)

        step_theta = math.sqrt((1 - gamma) / Q1) / m
        step_ring = math.sqrt((1 - gamma) / Q2) / (m**2 * cfg.wavelength)
        thetas = -1 + (np.arange(1, p_theta + 1) - 0.5) * step_theta
        ring_recips = (np.arange(1, p_phi + 1) - 0.5) * step_ring
        distances = np.outer(1 - thetas**2, 1 / ring_recips)
        return PolarGrid(
            gamma=gamma,
            p_theta=p_theta,
            p_phi=p_phi,
            thetas=thetas,
            ring_recips=ring_recips,
            distances=distances,
        )

    @staticmethod
    def build_polar(cfg: ArrayConfig, gamma: float) -> Dictionary:
        """Proposed dictionary B = [B_1 … B_Pφ] with ring-major columns."""
        grid = DictionaryFactory.polar_grid(cfg, gamma)
        atoms = np.empty((cfg.m_antennas, grid.p_theta * grid.p_phi), dtype=complex)
        doas = np.empty(atoms.shape[1])
        dists = np.empty(atoms.shape[1])
        col = 0
        for ring in range(grid.p_phi):
            for p, theta in enumerate(grid.thetas):
                d = float(grid.distances[p, ring])
                atoms[:, col] = near_response(cfg, float(theta), d)
                doas[col] = theta
                dists[col] = d
                col += 1
        logger.debug(
            "dictionary.built",
            kind=DictionaryKind.POLAR_PROPOSED.value,
            m=cfg.m_antennas,
            p_theta=grid.p_theta,
            p_phi=grid.p_phi,
        )
        return Dictionary(
            atoms=atoms,
            kind=DictionaryKind.POLAR_PROPOSED,
            n_angles=grid.p_theta,
            n_rings=grid.p_phi,
            column_doas=doas,
            column_distances=dists,
            delta_theta=grid.delta_theta,
            delta_ring=grid.delta_ring,
            grid=grid,
            min_distance=cfg.fresnel_distance(),
        )

    @staticmethod
    def build_angular_dft(cfg: ArrayConfig) -> Dictionary:
        """Unitary M×M DFT dictionary of far-field responses."""
        doas = dft_doas(cfg.m_antennas)
        atoms = np.column_stack([far_response(cfg, float(t)) for t in doas])
        return Dictionary(
            atoms=atoms,
            kind=DictionaryKind.ANGULAR_DFT,
            n_angles=cfg.m_antennas,
            n_rings=1,
            column_doas=doas,
            column_distances=np.full(cfg.m_antennas, np.inf),
            delta_theta=2.0 / cfg.m_antennas,
            delta_ring=0.0,
        )

    @staticmethod
    def build_polar_beta(
        cfg: ArrayConfig, beta: float, rho_min: Optional[float] = None
    ) -> Dictionary:
        """β-controlled comparison dictionary.

        M DFT angles; per angle Q = ⌊√(M/2)/β⌋ rings at
        d_q = (1-θ²)M²λ/(8β²q), q = 1..Q-1, plus the far-field ring q = 0.
        Every ring keeps its own distance so no two columns coincide; atoms
        closer than ``rho_min`` (Fresnel distance by default) are marked through
        ``Dictionary.min_distance`` rather than moved.
        """
        if not beta > 0:
            msg = f"beta must be positive, got {beta}"
            raise ParameterDomainError(msg)
        rho = cfg.fresnel_distance() if rho_min is None else rho_min
        if not rho > 0:
            msg = f"rho_min must be positive, got {rho}"
            raise ParameterDomainError(msg)
        m = cfg.m_antennas
        n_rings = _stable_floor(math.sqrt(m / 2) / beta)
        if n_rings == 0:
            msg = f"beta={beta} gives no ring for M={m}; need beta <= {math.sqrt(m / 2):.6f}"
            raise DictionaryConstructionError(msg)

        thetas = dft_doas(m)
        scale = m**2 * cfg.wavelength / (8 * beta**2)
        atoms = np.empty((m, m * n_rings), dtype=complex)
        doas = np.tile(thetas, n_rings)
        dists = np.empty(m * n_rings)
        for q in range(n_rings):
            for p, theta in enumerate(thetas):
                col = q * m + p
                if q == 0:
                    atoms[:, col] = far_response(cfg, float(theta))
                    dists[col] = np.inf
                    continue
                d = (1 - theta**2) * scale / q
                atoms[:, col] = near_response(cfg, float(theta), d)
                dists[col] = d
        return Dictionary(
            atoms=atoms,
            kind=DictionaryKind.POLAR_BETA,
            n_angles=m,
            n_rings=n_rings,
            column_doas=doas,
            column_distances=dists,
            delta_theta=2.0 / m,
            delta_ring=1 / scale,
            min_distance=rho,
        )

    @staticmethod
    def build(
        cfg: ArrayConfig,
        kind: DictionaryKind,
        gamma: float = 0.5816,
        beta: float = 1.2,
    ) -> Dictionary:
        """Dispatch on dictionary kind."""
        if kind is DictionaryKind.POLAR_PROPOSED:
            return DictionaryFactory.build_polar(cfg, gamma)
        if kind is DictionaryKind.ANGULAR_DFT:
            return DictionaryFactory.build_angular_dft(cfg)
        return DictionaryFactory.build_polar_beta(cfg, beta)


def max_adjacent_coherence(
    dictionary: Dictionary, min_distance: Optional[float] = None
) -> float:
    """Largest |b_iᴴ b_j| over grid-adjacent column pairs.

    Pairs are neighbouring angles on one ring and neighbouring rings at one
    angle. Pairs touching an atom closer than ``min_distance`` are skipped;
    it defaults to the dictionary's own floor and 0 scans every pair.
    """
    if dictionary.kind is DictionaryKind.ANGULAR_DFT:
        msg = "adjacent coherence is defined for polar dictionaries only"
        raise ParameterDomainError(msg)
    atoms = dictionary.atoms
    dists = dictionary.column_distances
    floor = dictionary.min_distance if min_distance is None else min_distance
    keep = dists >= floor

    best = 0.0
    for ring in range(dictionary.n_rings):
        for angle in range(dictionary.n_angles):
            i = dictionary.column_of(angle, ring)
            if not keep[i]:
                continue
            neighbours = []
            if angle + 1 < dictionary.n_angles:
                neighbours.append(dictionary.column_of(angle + 1, ring))
            if ring + 1 < dictionary.n_rings:
                neighbours.append(dictionary.column_of(angle, ring + 1))
            for j in neighbours:
                if keep[j]:
                    best = max(best, float(abs(np.vdot(atoms[:, i], atoms[:, j]))))
    return best


def unitary_extension(
    cfg: ArrayConfig, grid: PolarGrid, ring: int, phase_model: str = "fresnel"
) -> np.ndarray:
    """P_θ×P_θ extension of ring ``ring`` (1-based) onto a P_θ-element array.

    Entry (p1, p2) is (1/√P_θ)·exp(j(2π/λ)(d̃_{p2} - d_{p2,p1})) with the
    virtual antenna offsets κ_{p1} = (2p1 - P_θ - 1)/2. ``phase_model``
    selects the second-order path difference ("fresnel") or the exact one.
    """
    if not 1 <= ring <= grid.p_phi:
        msg = f"ring must lie in [1, {grid.p_phi}], got {ring}"
        raise ParameterDomainError(msg)
    if phase_model not in ("fresnel", "exact"):
        msg = f"phase_model must be 'fresnel' or 'exact', got {phase_model!r}"
        raise ParameterDomainError(msg)
    p_theta = grid.p_theta
    virtual = ArrayConfig(m_antennas=p_theta, wavelength=cfg.wavelength)
    kappa = virtual.kappa()
    k = 2 * math.pi / cfg.wavelength
    lam = cfg.wavelength
    out = np.empty((p_theta, p_theta), dtype=complex)
    for p2 in range(p_theta):
        theta = float(grid.thetas[p2])
        d = float(grid.distances[p2, ring - 1])
        if phase_model == "exact":
            diff = path_difference(virtual, theta, d)
        else:
            diff = theta * kappa * lam / 2 - (1 - theta**2) * (kappa * lam) ** 2 / (8 * d)
        out[:, p2] = np.exp(1j * k * diff)
    return out / math.sqrt(p_theta)
