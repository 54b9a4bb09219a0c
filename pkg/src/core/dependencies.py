"""Dependency providers for the command-line surface."""

from typing import Optional

from src.application.use_cases import (
    DictionaryInfoUseCase,
    RunSweepUseCase,
    RunTrialUseCase,
    SelfTestUseCase,
)
from src.core.config import Settings, get_settings
from src.infrastructure.config.scenario_loader import ScenarioLoader
from src.infrastructure.storage.result_storage import ResultStorage

__all__ = [
    "get_settings_dep",
    "get_scenario_loader",
    "get_dump_storage",
    "get_result_storage",
    "get_trial_use_case",
    "get_sweep_use_case",
    "get_dictionary_info_use_case",
    "get_selftest_use_case",
]


_scenario_loader: ScenarioLoader = ScenarioLoader()


def get_settings_dep() -> Settings:
    """Dependency: Get runtime settings."""
    return get_settings()


def get_scenario_loader() -> ScenarioLoader:
    """Dependency: Get scenario file loader instance."""
    return _scenario_loader


def get_dump_storage(dump_dir: Optional[str]) -> Optional[ResultStorage]:
    """Dependency: Storage for per-trial dumps, None when dumping is off."""
    if not dump_dir:
        return None
    return ResultStorage(base_path=dump_dir)


def get_result_storage(base_path: str) -> ResultStorage:
    """Dependency: Storage for sweep tables."""
    return ResultStorage(base_path=base_path)


def get_trial_use_case(
    settings: Settings, strict: bool = False, dump_dir: Optional[str] = None
) -> RunTrialUseCase:
    """Dependency: Build the single-trial use case."""
    return RunTrialUseCase(
        strict=strict or settings.sim_strict,
        record_timing=settings.sim_record_timing,
        storage=get_dump_storage(dump_dir),
    )


def get_sweep_use_case(
    settings: Settings,
    threads: Optional[int] = None,
    strict: bool = False,
    dump_dir: Optional[str] = None,
) -> RunSweepUseCase:
    """Dependency: Build the sweep use case on top of a trial use case."""
    return RunSweepUseCase(
        trial=get_trial_use_case(settings, strict=strict, dump_dir=dump_dir),
        threads=threads or settings.sim_threads,
    )


def get_dictionary_info_use_case() -> DictionaryInfoUseCase:
    """Dependency: Get dictionary report use case."""
    return DictionaryInfoUseCase()


def get_selftest_use_case(seed: int = 0) -> SelfTestUseCase:
    """Dependency: Get oracle suite use case."""
    return SelfTestUseCase(seed=seed)
