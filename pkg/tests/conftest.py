import numpy as np
import pytest

from solitonlab.soliton import SolitonParams


@pytest.fixture(scope="session")
def params2() -> SolitonParams:
    return SolitonParams(n=2, alpha=1.0, a=(1.0,))


@pytest.fixture(scope="session")
def params3() -> SolitonParams:
    return SolitonParams(n=3, alpha=1.0, a=(1.0, 2.0))


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
