import numpy as np
import pytest

from pdcontract.scenarios import DATA_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def data_dir():
    return DATA_DIR
