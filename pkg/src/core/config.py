"""Application configuration using Pydantic Settings."""

from pydantic import ConfigDict, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables and .env file."""

    model_config = ConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",  # Ignore extra environment variables
    )

    # Logging configuration
    sim_log_level: str = "INFO"
    sim_log_format: str = "json"

    # Execution
    sim_threads: int = 1
    sim_strict: bool = False
    sim_record_timing: bool = False

    # Output
    sim_output_dir: str = "./storage/results"

    @field_validator("sim_log_format")
    @classmethod
    def _check_format(cls, value: str) -> str:
        if value not in ("json", "console"):
            raise ValueError("sim_log_format must be 'json' or 'console'")
        return value

    @field_validator("sim_threads")
    @classmethod
    def _check_threads(cls, value: int) -> int:
        if value < 1:
            raise ValueError("sim_threads must be >= 1")
        return value


def get_settings() -> Settings:
    """Get application settings instance."""
    return Settings()
