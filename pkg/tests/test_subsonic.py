import numpy as np
import pytest

from laval_transonic.config import SolverConfig
from laval_transonic.constants import DEPRESSED_SEED_CONSTANT, DEPRESSED_SEED_FLOOR
from laval_transonic.error_processing import GasDomainError
from laval_transonic.nozzle import straight_channel
from laval_transonic.subsonic import (_seed_speeds,
                                      continue_to_sonic,
                                      default_schedule,
                                      flux_balance,
                                      outer_fixed_point,
                                      phi_grid,
                                      psi_grid,
                                      solve_regularized,
                                      subsolution_barrier,
                                      subsolution_slope,
                                      supersolution_barrier)


def test_default_schedule_approaches_critical_speed(gas):
    schedule = default_schedule(gas)
    assert len(schedule) == 19
    assert schedule[0] == pytest.approx(gas.c_star * 5.0 / 6.0, rel=1e-15)
    assert np.all(np.diff(schedule) > 0.0)
    assert 0.0 < gas.c_star - schedule[-1] < 1e-6 * gas.c_star


def test_grids():
    phi = phi_grid(-0.5, 10, 1.2)
    assert phi[0] == -0.5 and phi[-1] == 0.0
    steps = np.diff(phi)
    assert np.all(steps > 0.0)
    assert steps[-1] < steps[0]
    np.testing.assert_allclose(psi_grid(2.0, 4), [0.0, 0.5, 1.0, 1.5, 2.0])


def test_straight_channel_is_uniform_at_every_outlet_value(gas, straight_spec, sonic_maps, small_solver):
    maps = sonic_maps(straight_spec)
    field = solve_regularized(maps, gas, 0.5 * gas.c_star, small_solver)
    assert np.all(field.q == 0.5 * gas.c_star)
    field = continue_to_sonic(maps, gas, config=small_solver)
    assert field.c == gas.c_star
    assert np.all(field.q == gas.c_star)


def test_straight_channel_outer_fixed_point_is_exact(gas, straight_spec, small_solver):
    field = outer_fixed_point(straight_spec, gas, small_solver)
    assert field.outer_iterations == 1
    assert np.all(field.q == gas.c_star)
    assert field.history[0]["change"] == 0.0
    assert field.history[0]["mass_flux_mismatch"] == pytest.approx(0.0, abs=1e-13)
    assert flux_balance(field)["relative_imbalance"] == 0.0


def test_inlet_mass_flux_closes_on_the_default_nozzle(gas, default_spec):
    field = outer_fixed_point(default_spec, gas, SolverConfig(n_phi_minus=32, n_psi=8))
    assert field.history[-1]["mass_flux_mismatch"] <= 1e-6


def test_regularized_outlet_value_must_be_subsonic(gas, default_spec, sonic_maps, small_solver):
    maps = sonic_maps(default_spec)
    for c in (0.0, gas.c_star, 1.2 * gas.c_star):
        with pytest.raises(GasDomainError):
            solve_regularized(maps, gas, c, small_solver)


def test_regularized_solution_lies_between_the_barriers(gas, default_spec, sonic_maps, small_solver):
    maps = sonic_maps(default_spec)
    c = 0.5 * gas.c_star
    field = solve_regularized(maps, gas, c, small_solver)
    assert np.all(field.q[-1] == c)
    mu2 = subsolution_slope(field)
    assert mu2 > 0.0
    lower = subsolution_barrier(field.phi, gas, c, mu2)
    assert lower[-1] == pytest.approx(c, rel=1e-12)
    assert np.all(field.q >= lower[:, None] - 1e-9)
    upper = supersolution_barrier(field.phi[:, None], field.psi[None, :], gas, maps.m_in)
    assert np.all(field.q <= upper)


def test_regularized_flux_bookkeeping_closes(gas, default_spec, sonic_maps, small_solver):
    maps = sonic_maps(default_spec)
    field = solve_regularized(maps, gas, 0.9 * gas.c_star, small_solver)
    balance = flux_balance(field)
    assert balance["inlet_turning"] > 0.0
    assert balance["wall_turning"] > 0.0
    assert balance["sonic_outflow"] == pytest.approx(
        balance["inlet_turning"] - balance["wall_turning"], abs=1e-8)


def test_continuation_reaches_the_sonic_line(gas, default_spec, sonic_maps, small_solver):
    maps = sonic_maps(default_spec)
    field = continue_to_sonic(maps, gas, config=small_solver)
    assert field.c == gas.c_star
    assert np.all(field.q[-1] == gas.c_star)
    assert np.all(field.q <= gas.c_star)
    assert np.all(field.q > 0.5 * gas.c_star)
    middle = len(field.psi) // 2
    assert field.q[0, middle] < field.q[-1, middle]
    assert [stage["c"] for stage in field.history][-1] == gas.c_star


def test_short_schedule_returns_regularized_field(gas, default_spec, sonic_maps):
    config = SolverConfig(n_phi_minus=16, n_psi=8, schedule=[0.6, 0.7])
    field = continue_to_sonic(sonic_maps(default_spec), gas, config=config)
    assert field.c == 0.7
    assert len(field.history) == 2


def test_depressed_seed_starts_below_the_sonic_state(gas, default_spec):
    config = SolverConfig(n_phi_minus=16, n_psi=8, subsonic_seed="depressed")
    seed = _seed_speeds(default_spec, gas, config, 5)
    expected = gas.c_star - DEPRESSED_SEED_CONSTANT * 0.3 ** 2.5
    np.testing.assert_allclose(seed, expected, rtol=1e-14)
    deep = straight_channel(l_minus=-3.0)
    assert np.all(_seed_speeds(deep, gas, config, 5) == DEPRESSED_SEED_FLOOR * gas.c_star)
    assert np.all(_seed_speeds(default_spec, gas, SolverConfig(), 5) == gas.c_star)
