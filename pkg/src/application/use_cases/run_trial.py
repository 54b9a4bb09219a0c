"""Use case for simulating one URA frame end to end."""

import math
import time
from functools import lru_cache
from typing import List, Optional

import numpy as np
import structlog

from src.application.dtos.scenario_dtos import DecoderKind, ScenarioConfig
from src.application.exceptions import DecoderNonConvergenceError
from src.domain.entities.array_config import ArrayConfig, PathSet
from src.domain.entities.atom import RefineConfig
from src.domain.entities.cluster import ClusterState, SlotChannels
from src.domain.entities.codebook import Codebook, MessageSet, SlotObservation
from src.domain.entities.dictionary import Dictionary, DictionaryKind
from src.domain.entities.recovery import RecoveryConfig, RecoveryResult
from src.domain.entities.score import TrialScore
from src.domain.services import metrics
from src.domain.services.array_geometry import synth_channel
from src.domain.services.channel_clustering import ChannelClusterer
from src.domain.services.dictionary_factory import DictionaryFactory
from src.domain.services.offgrid_refine import NTurboCoSaMP
from src.domain.services.sparse_recovery import TurboCoSaMP, s_omp, two_stage
from src.domain.services.ura_codec import URACodec
from src.infrastructure.storage.result_storage import ResultStorage

logger = structlog.get_logger(__name__)


@lru_cache(maxsize=16)
def cached_dictionary(
    m_antennas: int, wavelength: float, kind: DictionaryKind, gamma: float, beta: float
) -> Dictionary:
    """Dictionaries are deterministic; build each one once per process."""
    array = ArrayConfig(m_antennas=m_antennas, wavelength=wavelength)
    return DictionaryFactory.build(array, kind, gamma=gamma, beta=beta)


def trial_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index``."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(index,)))


class RunTrialUseCase:
    """Draw users, transmit S slots, decode each slot, stitch and score.

    Business rules:
    - Every random draw comes from the trial's own seed stream
    - Decoder non-convergence is recorded; it raises only in strict mode
    - Wall-clock time is measured only when timing is enabled
    """

    def __init__(
        self,
        strict: bool = False,
        record_timing: bool = False,
        storage: Optional[ResultStorage] = None,
    ) -> None:
        """Initialize use case with execution flags and optional dump storage."""
        self.strict = strict
        self.record_timing = record_timing
        self.storage = storage

    def execute(
        self, cfg: ScenarioConfig, index: int, snr_db: Optional[float] = None
    ) -> TrialScore:
        """Simulate trial ``index`` at ``snr_db`` (first configured SNR by default)."""
        snr = cfg.snr_db[0] if snr_db is None else snr_db
        start = time.perf_counter()
        rng = trial_rng(cfg.base_seed, index)
        array = cfg.array()
        dictionary = cached_dictionary(
            array.m_antennas, array.wavelength, cfg.dictionary, cfg.gamma, cfg.beta
        )
        codec = URACodec(cfg.n_block, cfg.j_bits, cfg.s_slots)
        codebook = codec.make_codebook(rng)
        msgs = codec.draw_messages(rng, cfg.k_a, cfg.allow_collisions)
        channels = self._draw_channels(cfg, array, dictionary, rng)

        slots: List[SlotChannels] = []
        nmse_slots: List[float] = []
        iterations: List[int] = []
        noise_vars: List[float] = []
        converged = True
        flags: List[str] = []
        for s in range(cfg.s_slots):
            obs = codec.transmit_slot(codebook, msgs, s, channels, snr, rng)
            result = self._decode(cfg, array, codebook, dictionary, obs, snr)
            if not result.converged:
                converged = False
                flags.append(f"slot {s}: {','.join(result.flags) or 'not converged'}")
                if self.strict:
                    raise DecoderNonConvergenceError(
                        cfg.decoder.value, result.iterations, result.residual_power
                    )
            active = sorted(result.active_set)
            slots.append(
                SlotChannels(
                    slot=s,
                    channels=tuple(result.z_rows[j] for j in active),
                    codeword_indices=tuple(j + 1 for j in active),
                )
            )
            nmse_slots.append(metrics.nmse(result.z_rows, obs.true_rows()))
            iterations.append(result.iterations)
            noise_vars.append(obs.noise_var)

        clusterer = ChannelClusterer(
            cfg.j_bits,
            max_sweeps=cfg.max_sweeps,
            handle_collisions=cfg.handle_collisions,
        )
        decoded, state = clusterer.decode(slots)
        flags.extend(state.flags)
        p_e = metrics.per_user_error(decoded, msgs.messages())
        if self.storage is not None:
            self._dump(cfg, index, snr, msgs, state)

        score = TrialScore(
            p_e=p_e,
            nmse=metrics.mean_std(nmse_slots)["mean"],
            eb_n0_db=metrics.eb_n0_db(
                cfg.s_slots, cfg.n_block, cfg.message_bits, float(np.mean(noise_vars))
            ),
            spectral_eff=metrics.spectral_efficiency(
                cfg.message_bits, cfg.k_a, cfg.s_slots, cfg.n_block
            ),
            iterations=float(np.mean(iterations)),
            nmse_per_slot=nmse_slots,
            seconds=time.perf_counter() - start if self.record_timing else math.nan,
            converged=converged,
            flags=flags,
        )
        logger.debug(
            "trial.done", index=index, snr_db=snr, p_e=p_e, nmse=score.nmse, decoded=len(decoded)
        )
        return score

    def _draw_channels(
        self,
        cfg: ScenarioConfig,
        array: ArrayConfig,
        dictionary: Dictionary,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """K_a × M channel matrix, constant over the S slots.

        Planted on-grid users get unit-modulus path gains with uniform
        phase, so every user carries the same energy.
        """
        h = np.empty((cfg.k_a, array.m_antennas), dtype=complex)
        for k in range(cfg.k_a):
            if cfg.on_grid:
                cols = rng.choice(dictionary.n_columns, size=cfg.l_paths, replace=False)
                gains = np.exp(2j * math.pi * rng.random(cfg.l_paths))
                h[k] = math.sqrt(array.m_antennas / cfg.l_paths) * (dictionary.atoms[:, cols] @ gains)
                continue
            paths = PathSet.draw(rng, cfg.l_paths, (cfg.distance_min, cfg.distance_max))
            h[k] = synth_channel(array, paths, cfg.field).coefficients
        return h

    def _decode(
        self,
        cfg: ScenarioConfig,
        array: ArrayConfig,
        codebook: Codebook,
        dictionary: Dictionary,
        obs: SlotObservation,
        snr_db: float,
    ) -> RecoveryResult:
        k = cfg.k_max or cfg.k_a
        if cfg.decoder is DecoderKind.SOMP:
            return s_omp(obs.y, codebook.matrix, k)
        if cfg.decoder is DecoderKind.TWOSTAGE:
            return two_stage(
                obs.y, codebook.matrix, dictionary.atoms, k, cfg.per_row_sparsity or cfg.l_paths
            )
        tau_sq = cfg.tau_sq
        if tau_sq is None:
            tau_sq = RecoveryConfig.stopping_power(obs.y, 10 ** (snr_db / 10))
        rcfg = RecoveryConfig(
            k_a=k,
            r_sparsity=cfg.decoder_sparsity(),
            tau_sq=tau_sq,
            max_iters=cfg.max_iters,
            ad_threshold=cfg.ad_threshold,
            ad_threshold_factor=cfg.ad_threshold_factor,
            progress_tol=cfg.progress_tol,
        )
        if cfg.decoder is DecoderKind.NTURBO:
            refine = RefineConfig(cfg.t_local, cfg.t_cyclic, cfg.newton_steps)
            return NTurboCoSaMP(array, codebook.matrix, dictionary, rcfg, refine).run(obs.y)
        return TurboCoSaMP(codebook.matrix, dictionary.atoms, rcfg).run(obs.y)

    def _dump(
        self,
        cfg: ScenarioConfig,
        index: int,
        snr_db: float,
        msgs: MessageSet,
        state: ClusterState,
    ) -> None:
        tag = f"{cfg.scenario_hash()}_snr{snr_db:g}_trial{index}"
        self.storage.write_ground_truth(tag, msgs)
        self.storage.write_clusters(tag, state)

