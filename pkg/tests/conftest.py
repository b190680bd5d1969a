import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpsql.bench.datagen import generate_data, tpch_catalog  # noqa: E402

# about 1,600 rows: small enough for the nested-loop oracle
TINY_SCALE = 0.0002
TINY_SEED = 7


@pytest.fixture(scope="session")
def tpch():
    return tpch_catalog()


@pytest.fixture(scope="session")
def tpch_user():
    return tpch_catalog("user")


@pytest.fixture(scope="session")
def tiny_tpch(tpch):
    return generate_data(TINY_SCALE, TINY_SEED, tpch)
