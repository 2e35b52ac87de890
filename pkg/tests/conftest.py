import numpy as np
import pytest

from laval_transonic.config import SolverConfig
from laval_transonic.gasmodel import gas_model
from laval_transonic.nozzle import build_maps, default_wall, straight_channel


@pytest.fixture(scope="session")
def gas():
    return gas_model(1.4)


@pytest.fixture
def default_spec():
    return default_wall()


@pytest.fixture
def straight_spec():
    return straight_channel()


@pytest.fixture
def small_solver():
    return SolverConfig(n_phi_minus=16, n_psi=8, n_phi_plus=16)


@pytest.fixture
def sonic_maps(gas):
    """Boundary maps of a nozzle with every boundary speed at c*, the first pass of the outer iterations."""

    def build(spec, samples=65):
        y = np.linspace(0.0, spec.inlet_height, samples)
        x_minus = np.linspace(spec.l_minus, 0.0, samples)
        x_plus = np.linspace(0.0, spec.l_plus, samples)
        sonic = np.full(samples, gas.c_star)
        return build_maps(spec, gas, q_in=(y, sonic), q_wall_minus=(x_minus, sonic),
                          q_wall_plus=(x_plus, sonic))

    return build
