"""Shared pytest configuration."""

import pytest
import structlog


@pytest.fixture(autouse=True)
def reset_structlog():
    """CLI runs bind logging to their own stderr; restore defaults afterwards."""
    yield
    structlog.reset_defaults()
