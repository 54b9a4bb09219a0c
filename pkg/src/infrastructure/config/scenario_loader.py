"""Flat key=value scenario file loader."""

from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from src.application.dtos.scenario_dtos import ScenarioConfig
from src.application.exceptions import ConfigurationError

PROFILES = {"desk": ScenarioConfig.desk, "full": ScenarioConfig.full}


class ScenarioLoader:
    """Parse scenario files into validated ScenarioConfig objects.

    Files hold one ``key=value`` per line with ``#`` comments; lists are
    comma-separated. The optional ``profile`` key picks the base profile
    (``desk`` or ``full``) that the remaining keys override.
    """

    def load(self, path: str, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
        """Load a file and apply CLI overrides on top.

        Raises:
            ConfigurationError: If the file is missing or a value is invalid
        """
        source = Path(path)
        if not source.is_file():
            raise ConfigurationError(f"scenario file not found: {path}")
        raw = dotenv_values(source)
        missing = sorted(k for k, v in raw.items() if v is None)
        if missing:
            raise ConfigurationError(f"keys without a value: {', '.join(missing)}")
        values: Dict[str, Any] = {k.strip().lower(): v for k, v in raw.items()}
        return self.build(values, overrides)

    def build(
        self, values: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None
    ) -> ScenarioConfig:
        """Validate a mapping of scenario values."""
        values = dict(values)
        if overrides:
            values.update({k: v for k, v in overrides.items() if v is not None})
        profile = str(values.pop("profile", "desk")).strip().lower()
        if profile not in PROFILES:
            raise ConfigurationError(
                f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}"
            )
        try:
            return PROFILES[profile](**values)
        except ValidationError as e:
            raise ConfigurationError(f"invalid scenario: {e}") from e
