import numpy as np
import pytest

from jetdet import config
from jetdet.jet import parse_jet


@pytest.fixture
def rng():
    return np.random.default_rng(config.SEED)


@pytest.fixture
def morse2():
    return parse_jet("z1^2 + z2^2", 6)


@pytest.fixture
def cusp():
    """A_2 germ z^3 at truncation 8."""
    return parse_jet("z^3", 8)
