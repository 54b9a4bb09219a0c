"""Turbo-CoSaMP joint activity detection / channel estimation and baselines.

Observation model: Y = A X Bᵀ + W with codebook A (N×2^J), dictionary
B (M×P) and a row-sparse X. All top-k selections use a stable sort so the
lowest index wins ties.
"""

import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import sparse

from src.domain.entities.recovery import (
    RecoveryConfig,
    RecoveryResult,
    RecoveryState,
    SupportEntry,
)
from src.domain.exceptions import DimensionMismatchError

logger = structlog.get_logger(__name__)

COND_LIMIT = 1e10
RIDGE_SCALE = 1e-8
# residual power treated as zero, relative to ‖Y‖²
RELATIVE_FLOOR = 1e-20


def stop_reason(power: float, previous: float, tol: float) -> Optional[str]:
    """Classify an iteration's residual power against the previous one.

    Returns ``"rejected"`` when the power did not drop (keep the previous
    state), ``"stalled"`` when it dropped by less than the fraction ``tol``
    (keep the new state, stop) and ``None`` otherwise.
    """
    if power >= previous:
        return "rejected"
    if power > previous * (1.0 - tol):
        return "stalled"
    return None


def non_convergence_flags(converged: bool, stalled: bool) -> List[str]:
    """Flags for a run that stopped before reaching τ²."""
    if converged:
        return []
    return ["stalled"] if stalled else ["max_iters"]


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores; equal scores keep ascending index order."""
    k = max(0, min(k, scores.shape[0]))
    return np.argsort(-scores, kind="stable")[:k]


def row_proxy_select(a: np.ndarray, residual: np.ndarray, k_a: int) -> List[int]:
    """2·k_a rows of AᴴR with the largest squared row norms."""
    if residual.shape[0] != a.shape[0]:
        msg = f"residual rows {residual.shape[0]} != codebook rows {a.shape[0]}"
        raise DimensionMismatchError(msg)
    want = 2 * k_a
    if want > a.shape[1]:
        logger.warning("row_proxy.clamped", requested=want, available=a.shape[1])
        want = a.shape[1]
    proxy = a.conj().T @ residual
    energy = np.sum(np.abs(proxy) ** 2, axis=1)
    return sorted(int(j) for j in top_k(energy, want))


def entry_proxy(a_rows: np.ndarray, residual: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A_Krᴴ R B*, equal to (B⊗A_Kr)ᴴ vec(R) reshaped column-major."""
    return a_rows.conj().T @ residual @ b.conj()


def entry_proxy_select(
    a: np.ndarray,
    rows: Sequence[int],
    residual: np.ndarray,
    b: np.ndarray,
    r: int,
) -> List[SupportEntry]:
    """2r largest entries of A_Krᴴ R B* as (codeword, atom) pairs.

    The proxy is the two-sided product; ties fall to the lowest row-major index.
    """
    if not rows:
        return []
    rows = list(rows)
    flat = np.abs(entry_proxy(a[:, rows], residual, b)).ravel()
    picks = top_k(flat, 2 * r)
    n_atoms = b.shape[1]
    return sorted((rows[int(i) // n_atoms], int(i) % n_atoms) for i in picks)


def solve_gains(y: np.ndarray, a_cols: np.ndarray, e_cols: np.ndarray) -> np.ndarray:
    """LS coefficients x of Y ≈ Σ_k x_k a_k e_kᵀ.

    Normal equations Λx = n with Λ = (A_Kᴴ A_K) ∘ (E_Kᴴ E_K) and
    n_k = a_kᴴ Y e_k*. A ridge term is added when Λ is ill-conditioned.
    """
    k = a_cols.shape[1]
    if k == 0:
        return np.zeros(0, dtype=complex)
    gram = (a_cols.conj().T @ a_cols) * (e_cols.conj().T @ e_cols)
    rhs = np.einsum("nk,nm,mk->k", a_cols.conj(), y, e_cols.conj())
    if np.linalg.cond(gram) > COND_LIMIT:
        eps = RIDGE_SCALE * float(np.trace(gram).real) / k
        logger.debug("ls.ridge", size=k, eps=eps)
        gram = gram + eps * np.eye(k)
    return np.linalg.solve(gram, rhs)


def ls_on_support(
    y: np.ndarray, a: np.ndarray, b: np.ndarray, support: Sequence[SupportEntry]
) -> np.ndarray:
    """Least-squares coefficients on the (codeword, atom) support."""
    if not support:
        return np.zeros(0, dtype=complex)
    js = [j for j, _ in support]
    ps = [p for _, p in support]
    return solve_gains(y, a[:, js], b[:, ps])


def synthesize(
    a: np.ndarray, b: np.ndarray, support: Sequence[SupportEntry], coefficients: np.ndarray
) -> np.ndarray:
    """Σ x_{j,p} a_j b_pᵀ."""
    out = np.zeros((a.shape[0], b.shape[0]), dtype=complex)
    for (j, p), x in zip(support, coefficients):
        out += x * np.outer(a[:, j], b[:, p])
    return out


def spatial_rows(
    b: np.ndarray, support: Sequence[SupportEntry], coefficients: np.ndarray
) -> Dict[int, np.ndarray]:
    """Spatial channel z_j = B x̂_j for every row holding coefficients."""
    rows: Dict[int, np.ndarray] = {}
    for (j, p), x in zip(support, coefficients):
        rows[j] = rows.get(j, np.zeros(b.shape[0], dtype=complex)) + x * b[:, p]
    return rows


def activity_threshold(energies: Iterable[float], cfg: RecoveryConfig) -> float:
    """υ: explicit value, else a fraction of the median non-zero row energy."""
    if cfg.ad_threshold is not None:
        return cfg.ad_threshold
    values = [e for e in energies if e > 0]
    if not values:
        return math.inf
    return cfg.ad_threshold_factor * float(np.median(values))


def screen(
    row_candidates: Sequence[int],
    support: Sequence[SupportEntry],
    coefficients: np.ndarray,
    k_a: int,
    r: int,
) -> Tuple[Tuple[int, ...], Tuple[SupportEntry, ...], np.ndarray]:
    """Keep k_a rows by energy, then the r largest coefficients inside them."""
    energy = {j: 0.0 for j in row_candidates}
    for (j, _), x in zip(support, coefficients):
        energy[j] = energy.get(j, 0.0) + float(abs(x) ** 2)
    ordered = sorted(energy)
    kept_idx = top_k(np.array([energy[j] for j in ordered]), k_a)
    kept_rows = tuple(sorted(ordered[int(i)] for i in kept_idx))
    keep = set(kept_rows)

    inside = [i for i, (j, _) in enumerate(support) if j in keep]
    mags = np.abs(coefficients[inside]) if inside else np.zeros(0)
    best = sorted(inside[int(i)] for i in top_k(mags, r))
    new_support = tuple(support[i] for i in best)
    return kept_rows, new_support, coefficients[best]


class TurboCoSaMP:
    """Row-wise S-CoSaMP activity detection fused with 2D-CoSaMP estimation."""

    name = "turbo"

    def __init__(self, a: np.ndarray, b: np.ndarray, cfg: RecoveryConfig):
        """Initialize with codebook, dictionary and recovery configuration."""
        if a.ndim != 2 or b.ndim != 2:
            msg = "codebook and dictionary must be matrices"
            raise DimensionMismatchError(msg)
        self.a = a
        self.b = b
        self.cfg = cfg

    def run(self, y: np.ndarray) -> RecoveryResult:
        """Iterate until ‖R‖² ≤ τ², a stall or max_iters."""
        self._check(y)
        cfg = self.cfg
        state = RecoveryState(residual=y.copy())
        history = [state.residual_power]
        target = max(cfg.tau_sq, RELATIVE_FLOOR * history[0])
        converged = state.residual_power <= target
        iterations = 0
        stalled = False

        while not converged and not stalled and iterations < cfg.max_iters:
            rows = sorted(
                set(state.row_support)
                | set(row_proxy_select(self.a, state.residual, cfg.k_a))
            )
            entries = entry_proxy_select(self.a, rows, state.residual, self.b, cfg.r_sparsity)
            merged = sorted(set(state.support) | set(entries))
            coeffs = ls_on_support(y, self.a, self.b, merged)
            kept_rows, support, _ = screen(rows, merged, coeffs, cfg.k_a, cfg.r_sparsity)
            # pruning splits coherent pairs; refit before measuring the residual
            kept = ls_on_support(y, self.a, self.b, support)
            residual = y - synthesize(self.a, self.b, support, kept)
            power = float(np.linalg.norm(residual) ** 2)
            iterations += 1
            reason = stop_reason(power, history[-1], cfg.progress_tol)
            if reason == "rejected":
                logger.debug("turbo_cosamp.no_improvement", iteration=iterations, power=power)
                stalled = True
                break
            state = RecoveryState(
                residual=residual, row_support=kept_rows, support=support, coefficients=kept
            )
            history.append(power)
            converged = power <= target
            stalled = reason == "stalled" and not converged

        result = self._finish(state, iterations, converged, history, stalled)
        logger.debug(
            "turbo_cosamp.stop",
            iterations=iterations,
            converged=converged,
            stalled=stalled,
            residual_power=history[-1],
            active=len(result.active_set),
        )
        return result

    def _check(self, y: np.ndarray) -> None:
        if y.shape != (self.a.shape[0], self.b.shape[0]):
            msg = f"Y shape {y.shape} != ({self.a.shape[0]}, {self.b.shape[0]})"
            raise DimensionMismatchError(msg)

    def _finish(
        self,
        state: RecoveryState,
        iterations: int,
        converged: bool,
        history: List[float],
        stalled: bool,
    ) -> RecoveryResult:
        energies = state.row_energies()
        upsilon = activity_threshold(energies.values(), self.cfg)
        active = frozenset(j for j, e in energies.items() if e > upsilon)
        rows = spatial_rows(self.b, state.support, state.coefficients)
        flags = non_convergence_flags(converged, stalled)
        return RecoveryResult(
            active_set=active,
            z_rows={j: rows[j] for j in sorted(active)},
            iterations=iterations,
            converged=converged,
            residual_history=history,
            estimate=state.estimate(self.a.shape[1], self.b.shape[1]),
            flags=flags,
        )


def turbo_cosamp(
    y: np.ndarray, a: np.ndarray, b: np.ndarray, cfg: RecoveryConfig
) -> RecoveryResult:
    """Run Turbo-CoSaMP once."""
    return TurboCoSaMP(a, b, cfg).run(y)


def residual_bound_holds(
    x_true: np.ndarray,
    x_hat: np.ndarray,
    residual: np.ndarray,
    sigma: float,
    epsilon: float,
) -> bool:
    """‖X̂ - X‖_F ≤ (‖R‖_F + √(NM)σ)/√(1-ε).

    X and X̂ are expressed against the unit-norm codebook.
    """
    if not epsilon < 1:
        return False
    if sparse.issparse(x_true):
        x_true = x_true.toarray()
    if sparse.issparse(x_hat):
        x_hat = x_hat.toarray()
    n, m = residual.shape
    lhs = float(np.linalg.norm(x_hat - x_true))
    rhs = (float(np.linalg.norm(residual)) + math.sqrt(n * m) * sigma) / math.sqrt(1 - epsilon)
    return lhs <= rhs + 1e-9


def s_omp(y: np.ndarray, a: np.ndarray, k_a: int) -> RecoveryResult:
    """Simultaneous OMP: k_a greedy row picks with an LS refit after each."""
    n_block, n_codewords = a.shape
    flags: List[str] = []
    if k_a > n_block:
        logger.warning("s_omp.underdetermined", k_a=k_a, n_block=n_block)
        flags.append("k_a_exceeds_n")
    chosen: List[int] = []
    residual = y.copy()
    z = np.zeros((0, y.shape[1]), dtype=complex)
    history = [float(np.linalg.norm(residual) ** 2)]
    for _ in range(min(k_a, n_codewords)):
        energy = np.sum(np.abs(a.conj().T @ residual) ** 2, axis=1)
        energy[chosen] = -1.0
        chosen.append(int(top_k(energy, 1)[0]))
        sub = a[:, chosen]
        z = np.linalg.lstsq(sub, y, rcond=None)[0]
        residual = y - sub @ z
        history.append(float(np.linalg.norm(residual) ** 2))
    rows = {j: z[i] for i, j in enumerate(chosen)}
    return RecoveryResult(
        active_set=frozenset(chosen),
        z_rows={j: rows[j] for j in sorted(rows)},
        iterations=len(chosen),
        converged=True,
        residual_history=history,
        flags=flags,
    )


def omp_vector(b: np.ndarray, z: np.ndarray, sparsity: int) -> Tuple[List[int], np.ndarray]:
    """Plain OMP of one vector against the columns of B."""
    picked: List[int] = []
    coeffs = np.zeros(0, dtype=complex)
    residual = z.copy()
    for _ in range(min(sparsity, b.shape[1])):
        corr = np.abs(b.conj().T @ residual)
        corr[picked] = -1.0
        picked.append(int(top_k(corr, 1)[0]))
        sub = b[:, picked]
        coeffs = np.linalg.lstsq(sub, z, rcond=None)[0]
        residual = z - sub @ coeffs
    return picked, coeffs


def two_stage(
    y: np.ndarray, a: np.ndarray, b: np.ndarray, k_a: int, per_row_sparsity: int
) -> RecoveryResult:
    """S-OMP rows followed by a per-row OMP decomposition over B."""
    first = s_omp(y, a, k_a)
    rows_idx: List[int] = []
    cols_idx: List[int] = []
    values: List[complex] = []
    z_rows: Dict[int, np.ndarray] = {}
    for j, z in first.z_rows.items():
        picked, coeffs = omp_vector(b, z, per_row_sparsity)
        rows_idx.extend([j] * len(picked))
        cols_idx.extend(picked)
        values.extend(coeffs.tolist())
        z_rows[j] = b[:, picked] @ coeffs
    estimate = sparse.coo_array(
        (np.asarray(values, dtype=complex), (np.asarray(rows_idx, dtype=int), np.asarray(cols_idx, dtype=int))),
        shape=(a.shape[1], b.shape[1]),
    )
    support = list(zip(rows_idx, cols_idx))
    residual = y - synthesize(a, b, support, np.asarray(values, dtype=complex))
    return RecoveryResult(
        active_set=first.active_set,
        z_rows=z_rows,
        iterations=first.iterations,
        converged=True,
        residual_history=[float(np.linalg.norm(residual) ** 2)],
        estimate=estimate,
        flags=list(first.flags),
    )
