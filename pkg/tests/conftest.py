import numpy as np
import pytest

from dirgaf.coeff_models import CoefficientModel, CoefficientStream

FIXTURE_SEED = 20260808


@pytest.fixture(scope="session")
def rademacher64():
    """The shipped 64-pair fixture, regenerated from its defining stream."""
    from importlib.resources import files

    text = files("dirgaf").joinpath("fixtures/rademacher64.txt").read_text()
    rows = [line.split() for line in text.splitlines() if line and not line.startswith("#")]
    pairs = np.array([[float(a), float(b)] for a, b in rows])
    assert pairs.shape == (64, 2)
    return pairs


@pytest.fixture(scope="session")
def rademacher_stream():
    return CoefficientStream(CoefficientModel.rademacher(), FIXTURE_SEED, 0)
