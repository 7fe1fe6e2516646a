from __future__ import annotations

import numpy as np
import pytest

from koopcheck.checks import SuiteContext
from koopcheck.config import default_config, validate_config


@pytest.fixture(scope="session")
def ctx() -> SuiteContext:
    """Shared suite context on the shipped default config (built lazily)."""
    return SuiteContext(validate_config(default_config()))


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
