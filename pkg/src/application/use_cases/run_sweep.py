"""Use case for Monte Carlo sweeps over one scenario axis."""

import math
from typing import List, Optional, Sequence, Tuple

import anyio
import structlog

from src.application.dtos.scenario_dtos import ResultRow, ScenarioConfig, SweepAxis
from src.application.exceptions import ConfigurationError
from src.application.mappers.result_mapper import ResultMapper, format_value
from src.application.use_cases.run_trial import RunTrialUseCase
from src.domain.entities.dictionary import DictionaryKind
from src.domain.entities.score import TrialScore
from src.domain.exceptions import DomainError

logger = structlog.get_logger(__name__)


def failed_score() -> TrialScore:
    """Placeholder for a trial that raised; every field is NaN."""
    nan = math.nan
    return TrialScore(
        p_e=nan, nmse=nan, eb_n0_db=nan, spectral_eff=nan, iterations=nan, converged=False
    )


def apply_axis(
    cfg: ScenarioConfig, axis: SweepAxis, value: str
) -> Tuple[ScenarioConfig, Optional[float]]:
    """Scenario for one sweep point plus the SNR to simulate it at."""
    try:
        if axis is SweepAxis.SNR:
            return cfg, float(value)
        if axis is SweepAxis.N_BLOCK:
            update = {"n_block": int(value)}
        elif axis is SweepAxis.J_BITS:
            update = {"j_bits": int(value), "b_bits": None}
        else:
            update = {"dictionary": DictionaryKind(value)}
        return ScenarioConfig(**{**cfg.model_dump(), **update}), None
    except ValueError as e:
        raise ConfigurationError(f"invalid {axis.value} value {value!r}: {e}") from e


class RunSweepUseCase:
    """Run ``seeds`` trials per sweep point on worker threads.

    Business rules:
    - Trial i always uses seed stream (base_seed, i)
    - Results are reduced in trial order, so thread count never changes output
    - A trial failing with a domain error becomes a NaN row entry
    """

    def __init__(self, trial: RunTrialUseCase, threads: int = 1) -> None:
        """Initialize use case with the trial runner and worker count."""
        self.trial = trial
        self.threads = max(1, threads)

    async def execute(
        self, cfg: ScenarioConfig, axis: SweepAxis, values: Sequence[str]
    ) -> List[ResultRow]:
        """One ResultRow per value, in the given order."""
        logger.info(
            "sweep.start",
            scenario=cfg.scenario_hash(),
            axis=axis.value,
            points=len(values),
            seeds=cfg.seeds,
            threads=self.threads,
        )
        limiter = anyio.CapacityLimiter(self.threads)
        rows: List[ResultRow] = []
        for value in values:
            point_cfg, snr = apply_axis(cfg, axis, value)
            scores = await self._run_point(point_cfg, snr, limiter)
            label = format_value(float(value)) if axis is not SweepAxis.DICT else str(value)
            row = ResultMapper.scores_to_row(label, scores)
            logger.info(
                "sweep.point",
                axis_value=label,
                p_e_mean=row.p_e_mean,
                nmse_mean_db=row.nmse_mean_db,
            )
            rows.append(row)
        return rows

    async def _run_point(
        self, cfg: ScenarioConfig, snr: Optional[float], limiter: anyio.CapacityLimiter
    ) -> List[TrialScore]:
        scores: List[Optional[TrialScore]] = [None] * cfg.seeds

        async def one(index: int) -> None:
            scores[index] = await anyio.to_thread.run_sync(
                self._safe_trial, cfg, index, snr, limiter=limiter
            )

        async with anyio.create_task_group() as tg:
            for i in range(cfg.seeds):
                tg.start_soon(one, i)
        return [s if s is not None else failed_score() for s in scores]

    def _safe_trial(
        self, cfg: ScenarioConfig, index: int, snr: Optional[float]
    ) -> TrialScore:
        try:
            return self.trial.execute(cfg, index, snr)
        except DomainError as e:
            logger.error("trial.failed", index=index, error=str(e))
            return failed_score()
