"""
End-to-end checks on the default nozzle (gamma = 1.4, lambda = 3, delta = 0.1, l = -+0.3).

These solve on grids up to 256 x 64 and are marked slow; run them with `pytest -m slow`.
"""

import numpy as np
import pytest

from laval_transonic import assembly, subsonic, supersonic
from laval_transonic.cli import solve_transonic
from laval_transonic.config import RunConfig, SolverConfig
from laval_transonic.fit_report import fit_report
from laval_transonic.nozzle import default_wall
from laval_transonic.sonic_analysis import classify_sonic_points, default_drift_starts, riemann_invariant_drift
from laval_transonic.supersonic import FAMILIES
from laval_transonic.utilities import max_norm, observed_order

pytestmark = pytest.mark.slow

LEVELS = ((64, 16), (128, 32), (256, 64))


@pytest.fixture(scope="module")
def solutions(gas):
    """Transonic solutions on three grids, each refining the previous by 2 in every direction."""
    spec = default_wall()
    found = []
    for n_phi, n_psi in LEVELS:
        solver = SolverConfig(n_phi_minus=n_phi, n_psi=n_psi, n_phi_plus=n_phi)
        found.append(solve_transonic(spec, gas, RunConfig(solver=solver)))
    return spec, found


@pytest.fixture(scope="module")
def finest(solutions):
    spec, found = solutions
    return spec, found[-1]


def _rows(report):
    return {row["name"]: row for row in report["rows"]}


def test_subsonic_rate(gas, finest):
    spec, solution = finest
    row = _rows(fit_report(spec, gas, sub=solution.sub))["subsonic_rate"]
    assert row["predicted"] == 2.5
    assert row["status"] == "pass"


def test_supersonic_rates_and_boundary_source(gas, finest):
    spec, solution = finest
    report = fit_report(spec, gas, sup=solution.sup)
    rows = _rows(report)
    assert rows["supersonic_Q"]["measured"] == pytest.approx(5.0, abs=0.5)
    assert rows["supersonic_Q_phi"]["measured"] == pytest.approx(4.0, abs=0.6)
    assert rows["supersonic_Q_psi_bound"]["measured"] >= 4.95
    assert rows["boundary_source"]["measured"] == pytest.approx(4.25, rel=0.1)
    assert report["second_derivative"]["max_ratio"] is not None


def test_outer_iterations_converge(finest):
    _, solution = finest
    assert solution.sub.history[-1]["change"] <= 1e-8
    assert solution.sup.history[-1]["change"] <= 1e-8
    assert np.all(solution.sub.q <= solution.sub.c)
    assert np.all(solution.sup.Q <= 0.0)


def test_sonic_line_is_exceptional(gas, solutions):
    _, found = solutions
    for solution in found:
        diagnostics = classify_sonic_points(solution, gas)
        assert diagnostics.exceptional_fraction() == 1.0
    adjacent = [max(solution.matching_report["q_psi_adjacent_minus"],
                    solution.matching_report["q_psi_adjacent_plus"]) for solution in found]
    assert all(order >= 1.0 for order in observed_order(adjacent))


def test_one_sided_derivatives_match_under_refinement(solutions):
    _, found = solutions
    gaps = [solution.matching_report["q_phi_gap"] for solution in found]
    assert all(order >= 1.0 for order in observed_order(gaps))
    minus = [solution.matching_report["q_phi_minus"] for solution in found]
    plus = [solution.matching_report["q_phi_plus"] for solution in found]
    assert minus[-1] < minus[0] and plus[-1] < plus[0]


def test_riemann_invariants_are_transported(gas, solutions):
    _, found = solutions
    drifts = []
    for solution in found[1:]:
        starts = default_drift_starts(solution.sup, 10)
        drifts.append(max(riemann_invariant_drift(solution, starts, family, gas)["max_relative_drift"]
                          for family in FAMILIES))
    assert drifts[-1] <= 1e-3
    assert drifts[-1] <= 0.5 * drifts[0]


def test_physical_plane_closure(gas, finest):
    spec, solution = finest
    assert assembly.wall_image_error(solution, spec) <= 0.02
    assert assembly.station_mass_flux(solution, gas)["relative_drift"] <= 5e-3
    assert solution.sub.history[-1]["mass_flux_mismatch"] <= 1e-6
    assert solution.matching_report["mass_flux_mismatch"] <= 1e-6


def test_subsonic_fixed_point_is_independent_of_the_seed(gas):
    spec = default_wall()
    fields = [subsonic.outer_fixed_point(spec, gas, SolverConfig(n_phi_minus=64, n_psi=16, subsonic_seed=seed))
              for seed in ("sonic", "depressed")]
    assert max_norm(fields[0].q - fields[1].q) <= 1e-6


def test_supersonic_fixed_point_is_independent_of_the_seed(gas):
    spec = default_wall()
    fields = [supersonic.outer_fixed_point(spec, gas, SolverConfig(n_phi_plus=64, n_psi=16, supersonic_seed=seed))
              for seed in ("power_law", "scaled")]
    assert max_norm(fields[0].Q - fields[1].Q) <= 1e-6 * max_norm(fields[0].Q)


def test_regularized_fields_are_ordered_by_outlet_value(gas, sonic_maps):
    maps = sonic_maps(default_wall())
    solver = SolverConfig(n_phi_minus=32, n_psi=16)
    rng = np.random.default_rng(20)
    for _ in range(20):
        low, high = np.sort(rng.uniform(0.3, 0.95, 2)) * gas.c_star
        lower = subsonic.solve_regularized(maps, gas, low, solver)
        upper = subsonic.solve_regularized(maps, gas, high, solver)
        assert np.all(lower.q <= upper.q + 1e-12)
        barrier = subsonic.supersolution_barrier(upper.phi[:, None], upper.psi[None, :], gas, maps.m_in)
        assert np.all(upper.q <= barrier)
        floor = subsonic.subsolution_barrier(lower.phi, gas, low, subsonic.subsolution_slope(lower))
        assert np.all(lower.q >= floor[:, None] - 1e-9)
