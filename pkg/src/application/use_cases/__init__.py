"""Use cases for simulation, sweeps and diagnostics."""

from .run_trial import RunTrialUseCase
from .run_sweep import RunSweepUseCase
from .dictionary_info import DictionaryInfoUseCase
from .selftest import SelfTestUseCase

__all__ = [
    "RunTrialUseCase",
    "RunSweepUseCase",
    "DictionaryInfoUseCase",
    "SelfTestUseCase",
]
