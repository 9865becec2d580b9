import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lattice3b import builtin_model, coupling_threshold


@pytest.fixture(scope="session")
def spec8():
    """Small builtin model, moderate couplings."""
    spec = builtin_model(8, 0.0, 0.0)
    mu0 = coupling_threshold(spec, 1)
    return spec.with_params(mu1=0.9 * mu0, mu2=0.9 * mu0)


@pytest.fixture(scope="session")
def critical8():
    spec = builtin_model(8, 0.0, 0.0)
    mu0 = coupling_threshold(spec, 1)
    return spec.with_params(mu1=mu0, mu2=mu0)


@pytest.fixture(scope="session")
def spec16_critical():
    spec = builtin_model(16, 0.0, 0.0)
    mu0 = coupling_threshold(spec, 1)
    return spec.with_params(mu1=mu0, mu2=mu0)
