import numpy as np
import pytest

from mskglass import ModelSpec, gauss_hermite


@pytest.fixture(scope="session")
def rule():
    return gauss_hermite(61)


@pytest.fixture(scope="session")
def rule40():
    return gauss_hermite(40)


@pytest.fixture(scope="session")
def rule80():
    return gauss_hermite(80)


@pytest.fixture(scope="session")
def reference_spec():
    """Two-species model used throughout: product 1.8 > 1, 0.9 >= 0.48."""
    return ModelSpec(delta2=[[1.5, 1.0], [1.0, 1.2]], lam=[0.6, 0.4])


@pytest.fixture(scope="session")
def sk_spec():
    """Classical reduction: all variances 1."""
    return ModelSpec(delta2=np.ones((2, 2)), lam=[0.5, 0.5])
