import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ndpp_hypergraph import ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_node_params():
    """The hand-checked 2x2 instance: L = [[2, 1/sqrt2], [-1/sqrt2, 2]]."""
    return ModelParams(
        beta=np.array([1.0, 1.0]),
        V=np.array([[1.0, 0.0], [0.0, 1.0]]),
        c_upper=np.array([2**-0.5]),
        gamma=1.0,
    )
