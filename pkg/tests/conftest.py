import sys
from pathlib import Path

import pytest
from hypothesis import settings

# make oracles.py importable regardless of how pytest is invoked
sys.path.insert(0, str(Path(__file__).parent))

from mzbec import collective_operators

# property tests must give the same verdict run to run
settings.register_profile("ci", derandomize=True)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def ops_6():
    return collective_operators(6)


@pytest.fixture(scope="session")
def ops_100():
    return collective_operators(100)
