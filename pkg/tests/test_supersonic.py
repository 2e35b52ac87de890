import numpy as np
import pytest
from scipy import integrate

from laval_transonic.classes_fields import SupersonicField
from laval_transonic.error_processing import CharacteristicTraceError, SignViolationError
from laval_transonic.nozzle import mass_flux
from laval_transonic.supersonic import (MINUS,
                                        PLUS,
                                        bounce_sum_oracle,
                                        integrate_Q,
                                        normalized_phi_grid,
                                        outer_fixed_point,
                                        power_law_field,
                                        seed_amplitude,
                                        solve_linear,
                                        trace_characteristic,
                                        wall_source)


@pytest.fixture
def seeded(gas, default_spec, sonic_maps):
    """Power-law Q~ on the grid of the sonic boundary maps, as in the first outer pass."""
    maps = sonic_maps(default_spec)
    m = mass_flux(default_spec, gas)
    phi = maps.zeta_plus * normalized_phi_grid(24, 1e-3)
    psi = np.linspace(0.0, m, 9)
    sigma = seed_amplitude(default_spec, gas, m)
    field = power_law_field(phi, psi, sigma, default_spec.lambda_plus + 2.0, phi[1])
    field.maps = maps
    return field, maps, sigma


def test_normalized_grid():
    unit = normalized_phi_grid(16, 1e-3)
    assert len(unit) == 17
    assert unit[0] == 0.0 and unit[1] == 1e-3 and unit[-1] == 1.0
    ratios = unit[2:] / unit[1:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_power_law_field_interpolates_exactly(gas, seeded):
    field, _, sigma = seeded
    power = field.scale_power
    assert np.all(field.Q[1:] < 0.0) and np.all(field.Q[0] == 0.0)
    for phi in (0.5 * field.eps, 0.37 * field.zeta_plus, field.zeta_plus):
        assert field.Q_at(phi, 0.3 * field.m) == pytest.approx(-sigma * phi ** power, rel=1e-12)
    assert np.all(field.speed(gas)[1:] > gas.c_star)
    assert field.speed(gas)[0, 0] == gas.c_star


def test_wall_source_vanishes_on_straight_walls(gas, straight_spec, sonic_maps):
    maps = sonic_maps(straight_spec)
    phi = np.linspace(0.0, maps.zeta_plus, 5)
    np.testing.assert_array_equal(wall_source(maps, gas, -np.ones(5) * 1e-3, phi), 0.0)


def test_wall_source_is_positive_and_needs_negative_Q(gas, seeded):
    field, maps, _ = seeded
    source = wall_source(maps, gas, field.wall_Q(), field.phi)
    assert source[0] == 0.0
    assert np.all(source[1:] > 0.0)
    with pytest.raises(SignViolationError):
        wall_source(maps, gas, np.zeros(len(field.phi)), field.phi)


@pytest.mark.parametrize("sources", [False, True])
def test_linear_solve_satisfies_the_reflection_conditions(gas, seeded, small_solver, sources):
    field, maps, _ = seeded
    source = wall_source(maps, gas, field.wall_Q(), field.phi)
    history = []
    W, Z = solve_linear(field, maps, gas, field.eps, config=small_solver, sources=sources,
                        history=history, source=source)
    start = field.eps_index
    assert np.all(W[:start + 1] == 0.0) and np.all(Z[:start + 1] == 0.0)
    np.testing.assert_allclose(W[start + 1:, 0] + Z[start + 1:, 0], 0.0, atol=1e-15)
    np.testing.assert_allclose(W[start + 1:, -1] + Z[start + 1:, -1], source[start + 1:], rtol=1e-9)
    assert bool(history) == sources


def test_linear_solve_without_source_is_trivial(gas, straight_spec, sonic_maps, seeded):
    field, _, _ = seeded
    maps = sonic_maps(straight_spec)
    W, Z = solve_linear(field, maps, gas, field.eps)
    assert not np.any(W) and not np.any(Z)


def test_integrate_Q_recovers_a_power_law():
    power = 5.0
    phi = 0.2 * normalized_phi_grid(400, 1e-3)
    psi = np.linspace(0.0, 1.0, 3)
    slope = -power * phi ** (power - 1.0)
    W = np.repeat(slope[:, None], 3, axis=1)
    field = integrate_Q(phi, psi, W, -W, phi[1], power)
    expected = -phi[:, None] ** power * np.ones(3)
    np.testing.assert_allclose(field.Q, expected, rtol=1e-3, atol=1e-12 * 0.2 ** power)
    assert field.Q[1, 0] == pytest.approx(-phi[1] ** power, rel=1e-12)


def test_integrate_Q_rejects_increasing_Q():
    phi = normalized_phi_grid(16, 1e-2)
    psi = np.linspace(0.0, 1.0, 3)
    W = np.ones((17, 3))
    with pytest.raises(SignViolationError):
        integrate_Q(phi, psi, W, -W, phi[1], 5.0)


def test_characteristic_crossing_matches_quadrature(gas, seeded):
    field, _, sigma = seeded
    power = field.scale_power
    path = trace_characteristic(field, (field.zeta_plus, field.m), PLUS, gas=gas)
    assert np.all(np.diff(path.phi) <= 0.0)
    assert np.all((path.psi >= 0.0) & (path.psi <= field.m))
    assert path.terminated_at == pytest.approx(field.eps)
    kinds = [wall for _, wall in path.bounces]
    assert kinds[0] == "axis"
    assert all(first != second for first, second in zip(kinds[:-1], kinds[1:]))
    assert len(path.axis_bounces()) + len(path.wall_bounces()) == len(path.bounces)
    first_hit = path.bounces[0][0]

    def sqrt_b(phi):
        return float(np.sqrt(gas.b(-sigma * phi ** power)))

    crossing, _ = integrate.quad(sqrt_b, first_hit, field.zeta_plus, epsrel=1e-10)
    assert crossing == pytest.approx(field.m, rel=2e-3)
    assert bounce_sum_oracle(path, lambda phi: 1.0) == -len(path.wall_bounces())


def test_characteristic_start_must_lie_in_the_domain(gas, seeded):
    field, _, _ = seeded
    with pytest.raises(CharacteristicTraceError):
        trace_characteristic(field, (0.5 * field.eps, 0.0), MINUS, gas=gas)
    with pytest.raises(CharacteristicTraceError):
        trace_characteristic(field, (field.zeta_plus, 2.0 * field.m), MINUS, gas=gas)
    with pytest.raises(ValueError):
        trace_characteristic(field, (field.zeta_plus, 0.0), "sideways", gas=gas)


def test_straight_channel_supersonic_field_is_sonic(gas, straight_spec, small_solver):
    field = outer_fixed_point(straight_spec, gas, small_solver)
    assert field.outer_iterations == 1
    assert not np.any(field.Q)
    np.testing.assert_array_equal(field.speed(gas), gas.c_star)
    assert field.zeta_plus == pytest.approx(gas.c_star * straight_spec.l_plus, rel=1e-13)
    assert field.m == pytest.approx(mass_flux(straight_spec, gas), rel=1e-15)


def test_unused_supersonic_field_defaults():
    field = SupersonicField(phi=[0.0, 0.1, 1.0], psi=[0.0, 1.0], Q=np.zeros((3, 2)), eps=0.1, scale_power=5.0)
    assert field.eps_index == 1
    assert field.outer_iterations == 0
    assert not np.any(field.W) and not np.any(field.Z)
