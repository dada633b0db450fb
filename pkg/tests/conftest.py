import os
import tempfile

# The calibration cache is opened at import time; keep test runs out of the working tree.
os.environ.setdefault("UNIQUEID_CACHE_DIR", tempfile.mkdtemp(prefix="uniqueid-cache-"))
os.environ.setdefault("UNIQUEID_SIM_THREADS", "1")

import pytest

from tests.support import genesis_simulator


@pytest.fixture
def sim():
    """Five verifiers at trust threshold 2 with one supporter each, after genesis."""
    return genesis_simulator()


@pytest.fixture
def genesis():
    """Factory for genesis simulators with custom sizes or protocol overrides."""
    return genesis_simulator
