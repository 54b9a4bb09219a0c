"""Newtonized off-grid refinement and N-Turbo-CoSaMP.

An atom is g·a_j·e(θ, d)ᵀ with e the near-field response. With
u = d² - dθκλ + κ²λ²/4 and d_m = √u the response phase is ψ = k(d - d_m) and

    u_θ = -dκλ,  u_d = 2d - θκλ,  u_θθ = 0,  u_θd = -κλ,  u_dd = 2
    ∂d_m = u_x / (2d_m),  ∂²d_m = u_xy / (2d_m) - u_x·u_y / (4d_m³)
    ψ_θ = -k·∂_θ d_m,  ψ_d = k(1 - ∂_d d_m),  ψ_xy = -k·∂²d_m
    e_x = jψ_x·e,  e_xy = (jψ_xy - ψ_x·ψ_y)·e

The objective is the residual-power decrease
E = 2Re{g*·z} - |g|²‖a_j‖²‖e‖² with z = a_jᴴ R e*; the gain is held fixed
inside a Newton step.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import structlog

from src.domain.entities.array_config import ArrayConfig
from src.domain.entities.atom import MAX_DISTANCE, THETA_MARGIN, AtomParam, RefineConfig
from src.domain.entities.dictionary import Dictionary
from src.domain.entities.recovery import RecoveryConfig, RecoveryResult
from src.domain.exceptions import DimensionMismatchError
from src.domain.services.array_geometry import near_response, path_difference
from src.domain.services.sparse_recovery import (
    RELATIVE_FLOOR,
    activity_threshold,
    entry_proxy_select,
    ls_on_support,
    non_convergence_flags,
    row_proxy_select,
    solve_gains,
    stop_reason,
    top_k,
)

logger = structlog.get_logger(__name__)

SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class ResponseDerivatives:
    """e(θ, d) with its first and second partial derivatives."""

    e: np.ndarray
    e_t: np.ndarray
    e_d: np.ndarray
    e_tt: np.ndarray
    e_td: np.ndarray
    e_dd: np.ndarray


def response_derivatives(cfg: ArrayConfig, doa: float, distance: float) -> ResponseDerivatives:
    """Analytic derivatives of the near-field response."""
    kappa = cfg.kappa()
    lam = cfg.wavelength
    k = 2 * math.pi / lam
    diff = path_difference(cfg, doa, distance)
    d_m = distance - diff
    e = np.exp(1j * k * diff) / math.sqrt(cfg.m_antennas)

    u_t = -distance * kappa * lam
    u_d = 2 * distance - doa * kappa * lam
    u_td = -kappa * lam

    dm_t = u_t / (2 * d_m)
    # 1 - ∂_d d_m = (θκλ - 2(d - d_m)) / (2d_m), free of cancellation
    one_minus_dm_d = (doa * kappa * lam - 2 * diff) / (2 * d_m)
    dm_tt = -(u_t * u_t) / (4 * d_m**3)
    dm_td = u_td / (2 * d_m) - u_t * u_d / (4 * d_m**3)
    dm_dd = 2 / (2 * d_m) - u_d * u_d / (4 * d_m**3)

    psi_t = -k * dm_t
    psi_d = k * one_minus_dm_d
    psi_tt = -k * dm_tt
    psi_td = -k * dm_td
    psi_dd = -k * dm_dd

    return ResponseDerivatives(
        e=e,
        e_t=1j * psi_t * e,
        e_d=1j * psi_d * e,
        e_tt=(1j * psi_tt - psi_t * psi_t) * e,
        e_td=(1j * psi_td - psi_t * psi_d) * e,
        e_dd=(1j * psi_dd - psi_d * psi_d) * e,
    )


def projected_residual(residual: np.ndarray, a_col: np.ndarray) -> np.ndarray:
    """r = Rᵀ a_j*, so that a_jᴴ R e* = eᴴ r."""
    return residual.T @ a_col.conj()


def objective_e(
    cfg: ArrayConfig, residual: np.ndarray, a_col: np.ndarray, atom: AtomParam
) -> float:
    """Residual-power decrease obtained by subtracting the atom."""
    if atom.gain == 0:
        return 0.0
    e = near_response(cfg, atom.doa, atom.distance)
    z = np.vdot(e, projected_residual(residual, a_col))
    a_sq = float(np.vdot(a_col, a_col).real)
    e_sq = float(np.vdot(e, e).real)
    return float(2 * (np.conj(atom.gain) * z).real - abs(atom.gain) ** 2 * a_sq * e_sq)


def gradient_hessian(
    cfg: ArrayConfig, residual: np.ndarray, a_col: np.ndarray, atom: AtomParam
) -> Tuple[np.ndarray, np.ndarray]:
    """Ė = [E_θ, E_d] and Ë with the gain held fixed."""
    r = projected_residual(residual, a_col)
    der = response_derivatives(cfg, atom.doa, atom.distance)
    g_conj = np.conj(atom.gain)

    def part(v: np.ndarray) -> float:
        return float(2 * (g_conj * np.vdot(v, r)).real)

    grad = np.array([part(der.e_t), part(der.e_d)])
    h_td = part(der.e_td)
    hess = np.array([[part(der.e_tt), h_td], [h_td, part(der.e_dd)]])
    return grad, hess


def _clamp(cfg: ArrayConfig, doa: float, distance: float) -> Tuple[float, float]:
    doa = float(np.clip(doa, -1 + THETA_MARGIN, 1 - THETA_MARGIN))
    distance = float(np.clip(distance, cfg.fresnel_distance(), MAX_DISTANCE))
    return doa, distance


def newton_step(
    cfg: ArrayConfig, residual: np.ndarray, a_col: np.ndarray, atom: AtomParam
) -> Tuple[AtomParam, bool]:
    """One Newton update of (θ, d).

    Accepted only when Ë is negative definite and |a_jᴴ R e*|² grows;
    a rejected step returns the input atom unchanged.
    """
    grad, hess = gradient_hessian(cfg, residual, a_col, atom)
    det = float(hess[0, 0] * hess[1, 1] - hess[0, 1] ** 2)
    scale = abs(hess[0, 0] * hess[1, 1]) + hess[0, 1] ** 2
    if scale == 0 or abs(det) < SINGULAR_TOL * scale:
        return atom, False
    if not (det > 0 and hess[0, 0] < 0):
        return atom, False

    step = np.linalg.solve(hess, grad)
    doa, distance = _clamp(cfg, atom.doa - step[0], atom.distance - step[1])
    r = projected_residual(residual, a_col)
    z_old = np.vdot(near_response(cfg, atom.doa, atom.distance), r)
    z_new = np.vdot(near_response(cfg, doa, distance), r)
    if abs(z_new) ** 2 <= abs(z_old) ** 2:
        return atom, False
    return atom.moved(doa, distance), True


def refine_atom(
    cfg: ArrayConfig,
    residual: np.ndarray,
    a_col: np.ndarray,
    atom: AtomParam,
    steps: int,
) -> AtomParam:
    """Up to ``steps`` Newton steps; the gain is re-fit after each accepted one."""
    a_sq = float(np.vdot(a_col, a_col).real)
    r = projected_residual(residual, a_col)
    for _ in range(steps):
        moved, accepted = newton_step(cfg, residual, a_col, atom)
        if not accepted:
            break
        e = near_response(cfg, moved.doa, moved.distance)
        atom = moved.with_gain(np.vdot(e, r) / a_sq)
    return atom


def atom_contribution(cfg: ArrayConfig, a_col: np.ndarray, atom: AtomParam) -> np.ndarray:
    """g·a_j·e(θ, d)ᵀ."""
    return atom.gain * np.outer(a_col, near_response(cfg, atom.doa, atom.distance))


def sweep_refine(
    cfg: ArrayConfig,
    y: np.ndarray,
    a: np.ndarray,
    atoms: Sequence[AtomParam],
    sweeps: int,
    steps: int,
) -> List[AtomParam]:
    """Gauss-Seidel sweeps: each atom is refined against the leave-one-out residual."""
    atoms = list(atoms)
    residual = y.copy()
    for atom in atoms:
        residual -= atom_contribution(cfg, a[:, atom.codeword], atom)
    for _ in range(sweeps):
        for i, atom in enumerate(atoms):
            a_col = a[:, atom.codeword]
            loo = residual + atom_contribution(cfg, a_col, atom)
            refined = refine_atom(cfg, loo, a_col, atom, steps)
            atoms[i] = refined
            residual = loo - atom_contribution(cfg, a_col, refined)
    return atoms


def refit_gains(
    cfg: ArrayConfig, y: np.ndarray, a: np.ndarray, atoms: Sequence[AtomParam]
) -> List[AtomParam]:
    """Joint LS re-fit of all gains with e(θ, d) columns in place of grid atoms."""
    if not atoms:
        return []
    a_cols = np.column_stack([a[:, t.codeword] for t in atoms])
    e_cols = np.column_stack([near_response(cfg, t.doa, t.distance) for t in atoms])
    gains = solve_gains(y, a_cols, e_cols)
    return [t.with_gain(g) for t, g in zip(atoms, gains)]


def cyclic_refine(
    cfg: ArrayConfig,
    y: np.ndarray,
    a: np.ndarray,
    atoms: Sequence[AtomParam],
    refine_cfg: RefineConfig,
) -> List[AtomParam]:
    """T_c leave-one-out sweeps of T_N Newton steps, then a joint gain re-fit."""
    refined = sweep_refine(cfg, y, a, atoms, refine_cfg.t_cyclic, refine_cfg.newton_steps)
    return refit_gains(cfg, y, a, refined)


def merge_atoms(
    previous: Sequence[AtomParam],
    fresh: Sequence[AtomParam],
    delta_theta: float,
    delta_ring: float,
) -> List[AtomParam]:
    """Union of two atom lists; near-duplicates on one codeword are folded together."""
    merged = list(previous)
    for atom in fresh:
        for i, kept in enumerate(merged):
            if (
                kept.codeword == atom.codeword
                and abs(kept.doa - atom.doa) < delta_theta / 4
                and abs(kept.ring_recip() - atom.ring_recip()) < delta_ring / 4
            ):
                merged[i] = kept.with_gain(kept.gain + atom.gain)
                break
        else:
            merged.append(atom)
    return merged


def screen_atoms(
    atoms: Sequence[AtomParam], k_a: int, r: int
) -> List[AtomParam]:
    """Keep k_a codewords by energy, then the r largest gains inside them."""
    energy: Dict[int, float] = {}
    for t in atoms:
        energy[t.codeword] = energy.get(t.codeword, 0.0) + abs(t.gain) ** 2
    ordered = sorted(energy)
    kept = {ordered[int(i)] for i in top_k(np.array([energy[j] for j in ordered]), k_a)}
    inside = [i for i, t in enumerate(atoms) if t.codeword in kept]
    mags = np.array([abs(atoms[i].gain) for i in inside])
    best = sorted(inside[int(i)] for i in top_k(mags, r))
    return [atoms[i] for i in best]


class NTurboCoSaMP:
    """Turbo-CoSaMP with Newtonized continuous (θ, d) atoms."""

    name = "nturbo"

    def __init__(
        self,
        array: ArrayConfig,
        a: np.ndarray,
        dictionary: Dictionary,
        cfg: RecoveryConfig,
        refine_cfg: RefineConfig,
    ):
        """Initialize with array geometry, codebook, seeding dictionary and configs."""
        if dictionary.m_antennas != array.m_antennas:
            msg = f"dictionary rows {dictionary.m_antennas} != M={array.m_antennas}"
            raise DimensionMismatchError(msg)
        self.array = array
        self.a = a
        self.dictionary = dictionary
        self.cfg = cfg
        self.refine_cfg = refine_cfg

    def _seed(self, entry: Tuple[int, int], gain: complex) -> AtomParam:
        j, p = entry
        doa, distance = _clamp(
            self.array,
            float(self.dictionary.column_doas[p]),
            float(self.dictionary.column_distances[p]),
        )
        return AtomParam(gain=complex(gain), codeword=j, doa=doa, distance=distance)

    def fresh_atoms(
        self, residual: np.ndarray, entries: Sequence[Tuple[int, int]]
    ) -> List[AtomParam]:
        """Grid atoms fit to the current residual, then refined locally.

        Each fresh atom is refined against the residual with the other fresh
        atoms removed.
        """
        gains = ls_on_support(residual, self.a, self.dictionary.atoms, entries)
        fresh = [self._seed(e, g) for e, g in zip(entries, gains)]
        return sweep_refine(
            self.array, residual, self.a, fresh, 1, self.refine_cfg.t_local
        )

    def _residual(self, y: np.ndarray, atoms: Sequence[AtomParam]) -> np.ndarray:
        residual = y.copy()
        for t in atoms:
            residual -= atom_contribution(self.array, self.a[:, t.codeword], t)
        return residual

    def run(self, y: np.ndarray) -> RecoveryResult:
        """Grid selection, Newton refinement, screening and residual update per round."""
        if y.shape != (self.a.shape[0], self.array.m_antennas):
            msg = f"Y shape {y.shape} != ({self.a.shape[0]}, {self.array.m_antennas})"
            raise DimensionMismatchError(msg)
        cfg, rcfg = self.cfg, self.refine_cfg
        b = self.dictionary.atoms
        atoms: List[AtomParam] = []
        residual = y.copy()
        history = [float(np.linalg.norm(y) ** 2)]
        target = max(cfg.tau_sq, RELATIVE_FLOOR * history[0])
        converged = history[0] <= target
        stalled = False
        iterations = 0

        while not converged and not stalled and iterations < cfg.max_iters:
            rows = sorted(
                {t.codeword for t in atoms} | set(row_proxy_select(self.a, residual, cfg.k_a))
            )
            entries = entry_proxy_select(self.a, rows, residual, b, cfg.r_sparsity)
            fresh = self.fresh_atoms(residual, entries)
            candidate = merge_atoms(
                atoms, fresh, self.dictionary.delta_theta, self.dictionary.delta_ring
            )
            candidate = refit_gains(self.array, y, self.a, candidate)
            candidate = cyclic_refine(self.array, y, self.a, candidate, rcfg)
            candidate = screen_atoms(candidate, cfg.k_a, cfg.r_sparsity)
            candidate = refit_gains(self.array, y, self.a, candidate)
            new_residual = self._residual(y, candidate)
            power = float(np.linalg.norm(new_residual) ** 2)
            iterations += 1
            reason = stop_reason(power, history[-1], cfg.progress_tol)
            if reason == "rejected":
                stalled = True
                break
            atoms, residual = candidate, new_residual
            history.append(power)
            converged = power <= target
            stalled = reason == "stalled" and not converged

        result = self._finish(atoms, iterations, converged, history, stalled)
        logger.debug(
            "n_turbo_cosamp.stop",
            iterations=iterations,
            converged=converged,
            stalled=stalled,
            residual_power=history[-1],
            atoms=len(atoms),
        )
        return result

    def _finish(
        self,
        atoms: List[AtomParam],
        iterations: int,
        converged: bool,
        history: List[float],
        stalled: bool,
    ) -> RecoveryResult:
        energies: Dict[int, float] = {}
        rows: Dict[int, np.ndarray] = {}
        for t in atoms:
            energies[t.codeword] = energies.get(t.codeword, 0.0) + abs(t.gain) ** 2
            e = near_response(self.array, t.doa, t.distance)
            rows[t.codeword] = rows.get(t.codeword, 0) + t.gain * e
        upsilon = activity_threshold(energies.values(), self.cfg)
        active = frozenset(j for j, en in energies.items() if en > upsilon)
        return RecoveryResult(
            active_set=active,
            z_rows={j: rows[j] for j in sorted(active)},
            iterations=iterations,
            converged=converged,
            residual_history=history,
            atoms=atoms,
            flags=non_convergence_flags(converged, stalled),
        )


def n_turbo_cosamp(
    array: ArrayConfig,
    y: np.ndarray,
    a: np.ndarray,
    dictionary: Dictionary,
    cfg: RecoveryConfig,
    refine_cfg: RefineConfig,
) -> RecoveryResult:
    """Run N-Turbo-CoSaMP once."""
    return NTurboCoSaMP(array, a, dictionary, cfg, refine_cfg).run(y)
