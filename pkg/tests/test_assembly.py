import numpy as np
import pytest

from laval_transonic import subsonic, supersonic
from laval_transonic.assembly import (connect,
                                      integrate_theta,
                                      reconstruct_theta,
                                      station_mass_flux,
                                      to_physical,
                                      wall_angle_error,
                                      wall_image_error,
                                      write_vtk)
from laval_transonic.classes_fields import TransonicSolution
from laval_transonic.error_processing import (CurlResidualError,
                                              JacobianDegeneracyError,
                                              MassFluxMismatchError)
from laval_transonic.nozzle import straight_channel


@pytest.fixture
def straight_solution(gas, straight_spec, small_solver):
    sub = subsonic.outer_fixed_point(straight_spec, gas, small_solver)
    sup = supersonic.outer_fixed_point(straight_spec, gas, small_solver)
    solution = connect(sub, sup, gas)
    reconstruct_theta(solution, gas)
    return to_physical(solution, gas)


def test_straight_channel_joins_into_the_uniform_sonic_state(gas, straight_solution):
    solution = straight_solution
    assert np.all(solution.q == gas.c_star)
    assert solution.phi[solution.sonic_index] == 0.0
    assert np.all(np.diff(solution.phi) > 0.0)
    assert len(solution.phi) == len(solution.sub.phi) + len(solution.sup.phi) - 1
    report = solution.matching_report
    assert report["q_phi_gap"] == 0.0
    assert report["mass_flux_mismatch"] == pytest.approx(0.0, abs=1e-13)


def test_straight_channel_maps_to_the_rectangle(gas, straight_spec, straight_solution):
    solution = straight_solution
    assert solution.curl_residual == 0.0
    assert not np.any(solution.theta)
    phi, psi = np.meshgrid(solution.phi, solution.psi, indexing="ij")
    np.testing.assert_allclose(solution.x, phi / gas.c_star, atol=1e-13)
    np.testing.assert_allclose(solution.y, psi / (gas.rho_star * gas.c_star), atol=1e-13)
    assert solution.x[0, 0] == pytest.approx(straight_spec.l_minus, abs=1e-13)
    assert solution.x[-1, 0] == pytest.approx(straight_spec.l_plus, abs=1e-13)
    assert wall_image_error(solution, straight_spec) <= 1e-13
    assert wall_angle_error(solution) == 0.0


def test_station_mass_flux_is_constant_in_a_straight_channel(gas, straight_solution):
    report = station_mass_flux(straight_solution, gas)
    assert len(report["stations"]) == 5
    np.testing.assert_allclose(report["fluxes"], gas.rho_star * gas.c_star, rtol=1e-12)
    assert report["relative_drift"] <= 1e-12
    explicit = station_mass_flux(straight_solution, gas, x_stations=[-0.1, 0.2])
    assert explicit["stations"] == [-0.1, 0.2]


def test_connect_rejects_mismatched_mass_flux(gas, small_solver):
    sub = subsonic.outer_fixed_point(straight_channel(f0=1.0), gas, small_solver)
    sup = supersonic.outer_fixed_point(straight_channel(f0=1.5), gas, small_solver)
    with pytest.raises(MassFluxMismatchError):
        connect(sub, sup, gas)


def test_default_mass_flux_tolerance_is_tight(gas, small_solver):
    sub = subsonic.outer_fixed_point(straight_channel(), gas, small_solver)
    sup = supersonic.outer_fixed_point(straight_channel(), gas, small_solver)
    sub.psi = sub.psi * (1.0 + 1e-5)
    with pytest.raises(MassFluxMismatchError):
        connect(sub, sup, gas)
    report = connect(sub, sup, gas, tolerance=1e-4).matching_report
    assert report["mass_flux_mismatch"] == pytest.approx(1e-5, rel=1e-6)


def test_flow_angle_of_a_non_solution_fails_the_curl_check(gas):
    phi = np.linspace(-0.2, 0.0, 11)
    psi = np.linspace(0.0, 0.5, 6)
    q = (0.6 + 0.5 * phi)[:, None] * np.ones(len(psi))
    theta, residual = integrate_theta(phi, psi, q, gas, anchor=10)
    assert not np.any(theta)
    assert residual == pytest.approx(1.0)
    solution = TransonicSolution(sub=None, sup=None, phi=phi, psi=psi, q=q, sonic_index=10)
    with pytest.raises(CurlResidualError):
        reconstruct_theta(solution, gas)
    assert solution.theta is None


def test_physical_map_needs_flow_angle_and_positive_speed(gas):
    phi = np.linspace(-0.2, 0.0, 5)
    psi = np.linspace(0.0, 0.5, 3)
    solution = TransonicSolution(sub=None, sup=None, phi=phi, psi=psi, q=np.full((5, 3), 1e-5),
                                 sonic_index=4)
    with pytest.raises(ValueError):
        to_physical(solution, gas)
    solution.theta = np.zeros((5, 3))
    with pytest.raises(JacobianDegeneracyError):
        to_physical(solution, gas)


def test_vtk_export(tmp_path, straight_solution):
    path = write_vtk(straight_solution, tmp_path / "field.vtk")
    lines = path.read_text().splitlines()
    count = straight_solution.q.size
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[3] == "DATASET STRUCTURED_GRID"
    assert lines[4] == f"DIMENSIONS {len(straight_solution.phi)} {len(straight_solution.psi)} 1"
    assert len(lines) == 6 + count + 1 + 4 * (2 + count)
    assert "SCALARS theta double 1" in lines
