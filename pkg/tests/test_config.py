from pathlib import Path

import pytest

from laval_transonic.config import (NozzleConfig,
                                    RunConfig,
                                    SolverConfig,
                                    config_from_dict,
                                    load_config)
from laval_transonic.error_processing import ConfigError
from laval_transonic.nozzle import STRAIGHT_CHANNEL

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_shipped_configurations_load():
    default = load_config(CONFIGS / "default.toml")
    assert default.mode == "transonic"
    assert default.gas.gamma == 1.4
    assert default.solver.n_phi_minus == 128
    straight = load_config(CONFIGS / "straight_channel.toml")
    assert straight.nozzle.build().kind == STRAIGHT_CHANNEL
    assert straight.solver.n_psi == 8


def test_empty_configuration_is_fully_defaulted():
    config = config_from_dict({})
    assert config.as_dict() == RunConfig().as_dict()
    assert set(config.as_dict()) == {"gas", "nozzle", "solver", "run"}


def test_digest_identifies_the_configuration():
    first = config_from_dict({"gas": {"gamma": 1.4}})
    assert first.digest() == RunConfig().digest()
    assert config_from_dict({"gas": {"gamma": 1.3}}).digest() != first.digest()
    assert len(first.digest()) == 64


@pytest.mark.parametrize("data", [
    {"gas": {"gamma": 1.0}},
    {"gas": {"gamma": "1.4"}},
    {"nozzle": {"kind": "bell"}},
    {"nozzle": {"l_minus": 0.1}},
    {"nozzle": {"f0": -1.0}},
    {"nozzle": {"delta": -0.1}},
    {"solver": {"n_psi": 4}},
    {"solver": {"n_psi": 16.5}},
    {"solver": {"damping": 0.0}},
    {"solver": {"cfl": 1.5}},
    {"solver": {"tol_outer": -1e-8}},
    {"solver": {"mass_flux_tolerance": 0.0}},
    {"solver": {"fit_window_low": 0.6, "fit_window_high": 0.5}},
    {"solver": {"schedule": [0.5, 0.4]}},
    {"solver": {"subsonic_seed": "random"}},
    {"solver": {"supersonic_seed": "random"}},
    {"solver": {"unknown_knob": 1}},
    {"run": {"mode": "shock"}},
    {"run": {"levels": 2}},
    {"run": {"dump": "yes"}},
    {"plotting": {}},
])
def test_invalid_configurations_are_rejected(data):
    with pytest.raises(ConfigError):
        config = config_from_dict(data)
        config.nozzle.build()


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[gas\ngamma = 1.4\n")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_refined_multiplies_grid_sizes_only():
    solver = SolverConfig(n_phi_minus=16, n_psi=8, n_phi_plus=20, damping=0.7)
    refined = solver.refined(2)
    assert (refined.n_phi_minus, refined.n_psi, refined.n_phi_plus) == (32, 16, 40)
    assert refined.damping == 0.7


def test_overrides_keep_the_physics():
    config = config_from_dict({"nozzle": {"l_plus": 0.25}})
    overridden = config.with_overrides(mode="subsonic", output_dir="elsewhere", dump=True, levels=4)
    assert (overridden.mode, overridden.output_dir, overridden.dump, overridden.levels) == \
        ("subsonic", "elsewhere", True, 4)
    assert overridden.nozzle.l_plus == 0.25
    assert config.mode == "transonic"


def test_straight_channel_block_ignores_shape_parameters():
    spec = NozzleConfig(kind=STRAIGHT_CHANNEL, lambda_minus=1.0, delta=5.0).build()
    assert spec.delta1_minus == 0.0
    assert spec.total_turning == 0.0


def test_seed_choices_reach_the_solver_section():
    config = config_from_dict({"solver": {"subsonic_seed": "depressed", "supersonic_seed": "scaled"}})
    assert config.solver.subsonic_seed == "depressed"
    assert config.solver.supersonic_seed == "scaled"
    assert SolverConfig().supersonic_seed == "power_law"
    assert config.digest() != RunConfig().digest()
