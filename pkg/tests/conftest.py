import numpy as np
import pytest

from nambuhj.sampling import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240601)
