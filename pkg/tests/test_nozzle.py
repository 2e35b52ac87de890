import numpy as np
import pytest

from laval_transonic.error_processing import BoundaryMapError, NozzleParameterError
from laval_transonic.nozzle import (NOT_APPLICABLE,
                                    build_maps,
                                    default_wall,
                                    mass_flux,
                                    straight_channel,
                                    validate)


def test_power_law_wall_has_exact_curvature(default_spec):
    x = np.linspace(-0.3, 0.3, 61)
    np.testing.assert_allclose(default_spec.wall.d2(x), 0.1 * np.abs(x) ** 3, rtol=1e-14, atol=1e-18)
    assert default_spec.wall_height(0.0) == 1.0
    assert default_spec.wall.d1(-0.2) < 0.0 < default_spec.wall.d1(0.2)
    assert default_spec.wall.d3(0.2) > 0.0


def test_circular_inlet_meets_axis_and_wall_orthogonally(default_spec):
    height = default_spec.inlet_height
    assert default_spec.inlet.d1(0.0) == 0.0
    assert default_spec.inlet.g(height) == pytest.approx(default_spec.l_minus, abs=1e-12)
    assert default_spec.inlet.d1(height) == pytest.approx(-default_spec.wall.d1(default_spec.l_minus), rel=1e-12)
    assert 1.0 / default_spec.inlet.radius == pytest.approx(-default_spec.inlet_curvature(0.0), rel=1e-12)


def test_default_wall_is_admissible(default_spec):
    report = validate(default_spec)
    assert report.passed
    assert report.failed_conditions() == []
    names = [condition["name"] for condition in report.as_dict()["conditions"]]
    assert "upstream_curvature_envelope" in names
    assert "downstream_curvature_envelope" in names
    assert "inlet_compatibility" in names
    assert "inlet_curvature_window" in names


@pytest.mark.parametrize("kwargs, failing", [
    ({"lambda_minus": 2.0}, "upstream_curvature_envelope"),
    ({"lambda_plus": 1.5}, "downstream_curvature_envelope"),
])
def test_low_exponents_fail_the_envelope(kwargs, failing):
    report = validate(default_wall(**kwargs))
    assert not report.passed
    assert failing in [condition.name for condition in report.failed_conditions()]


def test_flat_wall_of_the_power_law_family_is_rejected():
    report = validate(default_wall(delta=0.0))
    assert not report.passed


def test_long_nozzle_only_warns():
    report = validate(default_wall(l_plus=0.7))
    assert report.passed
    assert [condition.name for condition in report.warnings()] == ["downstream_length"]


def test_straight_channel_conditions_are_not_applicable(straight_spec):
    report = validate(straight_spec)
    assert report.passed
    assert report.condition("upstream_curvature_envelope").severity == NOT_APPLICABLE
    assert report.condition("inlet_curvature_window").severity == NOT_APPLICABLE
    assert straight_spec.total_turning == 0.0


def test_parameter_errors():
    with pytest.raises(NozzleParameterError):
        default_wall(delta=-0.1)
    with pytest.raises(NozzleParameterError):
        default_wall(lambda_minus=-1.0)
    with pytest.raises(NozzleParameterError):
        straight_channel(l_minus=0.1)
    with pytest.raises(NozzleParameterError):
        straight_channel(f0=0.0)


def test_mass_flux_is_throat_height_times_critical_flux(gas, default_spec):
    assert mass_flux(default_spec, gas) == pytest.approx(gas.rho_star * gas.c_star, rel=1e-14)
    assert mass_flux(straight_channel(f0=2.0), gas) == pytest.approx(2.0 * gas.rho_star * gas.c_star, rel=1e-14)


def test_sonic_maps_of_straight_channel_are_linear(gas, straight_spec, sonic_maps):
    maps = sonic_maps(straight_spec)
    assert maps.zeta_minus == pytest.approx(gas.c_star * straight_spec.l_minus, rel=1e-13)
    assert maps.zeta_plus == pytest.approx(gas.c_star * straight_spec.l_plus, rel=1e-13)
    assert maps.m_in == pytest.approx(maps.m, rel=1e-13)
    x = np.linspace(0.0, straight_spec.l_plus, 7)
    np.testing.assert_allclose(maps.Phi_plus(x), gas.c_star * x, atol=1e-13)
    np.testing.assert_allclose(maps.X_plus(maps.Phi_plus(x)), x, atol=1e-12)
    np.testing.assert_allclose(maps.wall_turning_minus(np.linspace(maps.zeta_minus, 0.0, 5)), 0.0, atol=0.0)


def test_sonic_maps_of_default_wall_are_monotone(gas, default_spec, sonic_maps):
    maps = sonic_maps(default_spec)
    assert maps.zeta_minus < gas.c_star * default_spec.l_minus
    assert maps.zeta_plus > gas.c_star * default_spec.l_plus
    assert maps.m_in > maps.m
    y = np.linspace(0.0, default_spec.inlet_height, 9)
    psi = maps.Psi_in(y)
    assert np.all(np.diff(psi) > 0.0)
    np.testing.assert_allclose(maps.Y_in(psi), y, atol=1e-12)
    assert maps.Theta_plus(0.2) > 0.0 > maps.Theta_minus(-0.2)


def test_missing_sides_and_bad_samples(gas, default_spec):
    x = np.linspace(0.0, default_spec.l_plus, 9)
    maps = build_maps(default_spec, gas, q_wall_plus=(x, np.full(9, 1.2 * gas.c_star)))
    assert maps.zeta_minus is None and maps.m_in is None
    with pytest.raises(BoundaryMapError):
        maps.X_minus(-0.1)
    y = np.linspace(0.0, default_spec.inlet_height, 9)
    with pytest.raises(BoundaryMapError):
        build_maps(default_spec, gas, q_in=(y, np.full(9, 1.1 * gas.c_star)))
    with pytest.raises(BoundaryMapError):
        build_maps(default_spec, gas, q_wall_plus=(x, np.full(9, 0.9 * gas.c_star)))
    with pytest.raises(BoundaryMapError):
        build_maps(default_spec, gas, q_in=(y[::-1], np.full(9, 0.9 * gas.c_star)))
