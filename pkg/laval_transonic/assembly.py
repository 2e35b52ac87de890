"""
Joins a subsonic and a supersonic field on the sonic line phi = 0, reconstructs the flow angle from the
Chaplygin equations

    theta_psi = -A'(q) q_phi,    theta_phi = B'(q) q_psi,

and maps the solution back to the physical plane through the inverse Jacobian

    x_phi = cos(theta)/q,    x_psi = -sin(theta)/(rho q),
    y_phi = sin(theta)/q,    y_psi =  cos(theta)/(rho q).

All quadratures run along grid lines with the trapezoid rule, anchored at the sonic line where
theta = 0 and x = 0.
"""

import logging

import numpy as np
from scipy import integrate

from . classes_fields import TransonicSolution
from . constants import (CURL_RESIDUAL_THRESHOLD_DEFAULT,
                         MASS_FLUX_TOLERANCE_DEFAULT,
                         MASS_STATIONS_DEFAULT,
                         SPEED_FLOOR)
from . error_processing import (CurlResidualError,
                                JacobianDegeneracyError,
                                MassFluxMismatchError)
from . utilities import max_norm

logger = logging.getLogger(__name__)


def _gradient(values, coordinates, axis):
    if len(coordinates) < 2:
        return np.zeros_like(values)
    return np.gradient(values, coordinates, axis=axis, edge_order=2 if len(coordinates) > 2 else 1)


def _integrate_from_anchor(integrand, phi, anchor):
    """Trapezoid integral along axis 0 of `integrand` from phi[anchor], in both directions."""
    result = np.zeros_like(integrand)
    if anchor < len(phi) - 1:
        result[anchor:] = integrate.cumulative_trapezoid(integrand[anchor:], phi[anchor:], axis=0, initial=0.0)
    if anchor > 0:
        backward = integrate.cumulative_trapezoid(integrand[anchor::-1], phi[anchor::-1], axis=0, initial=0.0)
        result[:anchor + 1] = backward[::-1]
    return result


def _rows_on(psi_source, q_source, psi_target):
    """Carries the columns of q_source over to psi_target at the same fraction of the psi-extent."""
    source = psi_source / psi_source[-1]
    target = psi_target / psi_target[-1]
    if len(source) == len(target) and np.allclose(source, target, rtol=0.0, atol=1e-14):
        return np.array(q_source, dtype=float)
    return np.array([np.interp(target, source, row) for row in q_source])


def matching_report(sub, sup, gas):
    """
    One-sided derivatives at the sonic line: q_phi(0-) from the last subsonic interval, q_phi(0+) from
    the first supersonic interval, and q_psi on the rows adjacent to phi = 0.
    """
    q_sup = sup.speed(gas)
    q_sub = _rows_on(sub.psi, sub.q, sup.psi)
    left = (q_sub[-1] - q_sub[-2]) / (sub.phi[-1] - sub.phi[-2])
    right = (q_sup[1] - q_sup[0]) / (sup.phi[1] - sup.phi[0])
    return {
        "q_phi_minus": max_norm(left),
        "q_phi_plus": max_norm(right),
        "q_phi_gap": max_norm(left - right),
        "q_psi_sonic": max_norm(_gradient(np.full(len(sup.psi), gas.c_star), sup.psi, 0)),
        "q_psi_adjacent_minus": max_norm(_gradient(q_sub[-2], sup.psi, 0)),
        "q_psi_adjacent_plus": max_norm(_gradient(q_sup[1], sup.psi, 0)),
        "h_minus": float(sub.phi[-1] - sub.phi[-2]),
        "h_plus": float(sup.phi[1] - sup.phi[0]),
    }


def connect(sub, sup, gas, tolerance=MASS_FLUX_TOLERANCE_DEFAULT):
    """
    Joins q_- on phi <= 0 with A_+^-1(Q_+) on phi >= 0. The subsonic rows are carried to the
    supersonic psi-nodes; the sonic row is c* on both sides.
    """
    mismatch = abs(sub.m_in - sup.m) / sup.m
    if mismatch > tolerance:
        raise MassFluxMismatchError(f"subsonic m_in={sub.m_in:.10g} and supersonic m={sup.m:.10g} differ by "
                                    f"{mismatch:.3e} (tolerance {tolerance:.1e})")
    q_sub = _rows_on(sub.psi, sub.q, sup.psi)
    q_sup = sup.speed(gas)
    q = np.vstack((q_sub[:-1], q_sup))
    sonic_index = len(sub.phi) - 1
    q[sonic_index] = gas.c_star
    phi = np.concatenate((sub.phi[:-1], sup.phi))
    report = matching_report(sub, sup, gas)
    report["mass_flux_mismatch"] = mismatch
    logger.info(f"joined fields at phi=0: q_phi gap {report['q_phi_gap']:.3e}, mass flux mismatch {mismatch:.3e}")
    return TransonicSolution(sub=sub, sup=sup, phi=phi, psi=sup.psi, q=q, sonic_index=sonic_index,
                             matching_report=report)


def integrate_theta(phi, psi, q, gas, anchor):
    """
    theta from theta_phi = B(q)_psi integrated along phi from theta = 0 on the row `anchor`; the
    axis column psi = 0 is held at theta = 0.

    Returns (theta, curl_residual), the residual being max |theta_psi + A(q)_phi| relative to
    max |A(q)_phi|.
    """
    B_psi = _gradient(np.asarray(gas.B(q)), psi, 1)
    B_psi[:, 0] = 0.0
    theta = _integrate_from_anchor(B_psi, phi, anchor)
    A_phi = _gradient(np.asarray(gas.A(q)), phi, 0)
    defect = max_norm(_gradient(theta, psi, 1) + A_phi)
    scale = max_norm(A_phi)
    if scale == 0.0:
        residual = 0.0 if defect == 0.0 else float("inf")
    else:
        residual = defect / scale
    return theta, residual


def reconstruct_theta(solution, gas, threshold=CURL_RESIDUAL_THRESHOLD_DEFAULT):
    theta, residual = integrate_theta(solution.phi, solution.psi, solution.q, gas, solution.sonic_index)
    solution.curl_residual = residual
    logger.info(f"flow angle reconstructed; relative curl residual {residual:.3e}")
    if residual > threshold:
        raise CurlResidualError(f"relative curl residual {residual:.3e} exceeds {threshold:.3e}; "
                                f"the speed field is not a converged solution")
    solution.theta = theta
    return solution


def to_physical(solution, gas):
    """
    Physical coordinates by quadrature along phi from the sonic line, where x = 0 and
    y(0, psi) = integral of cos(theta)/(rho q) dpsi = psi/(rho* c*).
    """
    if solution.theta is None:
        raise ValueError("reconstruct_theta must run before to_physical")
    q, theta = solution.q, solution.theta
    low = float(np.min(q))
    if low < SPEED_FLOOR * gas.c_star:
        raise JacobianDegeneracyError(f"speed {low:.3e} below the floor {SPEED_FLOOR * gas.c_star:.3e}; "
                                      f"the potential-plane Jacobian degenerates")
    rho = np.asarray(gas.density(q * q))
    anchor = solution.sonic_index
    y_psi = np.cos(theta[anchor]) / (rho[anchor] * q[anchor])
    y_sonic = integrate.cumulative_trapezoid(y_psi, solution.psi, initial=0.0)
    solution.x = _integrate_from_anchor(np.cos(theta) / q, solution.phi, anchor)
    solution.y = y_sonic[None, :] + _integrate_from_anchor(np.sin(theta) / q, solution.phi, anchor)
    return solution


def wall_angle_error(solution):
    """max |theta(phi, m) - Theta(X(phi))| on both walls, using the boundary maps of the two fields."""
    if solution.theta is None:
        raise ValueError("reconstruct_theta must run before wall_angle_error")
    anchor = solution.sonic_index
    errors = []
    sub_maps = solution.sub.maps
    if sub_maps is not None and sub_maps.zeta_minus is not None and anchor > 0:
        phi = solution.phi[:anchor]
        errors.append(np.abs(solution.theta[:anchor, -1] - sub_maps.Theta_minus(sub_maps.X_minus(phi))))
    sup_maps = solution.sup.maps
    if sup_maps is not None and sup_maps.zeta_plus is not None:
        phi = solution.phi[anchor + 1:]
        errors.append(np.abs(solution.theta[anchor + 1:, -1] - sup_maps.Theta_plus(sup_maps.X_plus(phi))))
    return max((max_norm(error) for error in errors), default=0.0)


def station_mass_flux(solution, gas, x_stations=None):
    """
    Integral of rho q cos(theta) dy across vertical stations x = const, between the axis and the wall.
    Without explicit stations MASS_STATIONS_DEFAULT interior stations cover the common x-range of
    the streamlines.
    """
    if solution.x is None:
        raise ValueError("to_physical must run before station_mass_flux")
    x, y = solution.x, solution.y
    if x_stations is None:
        low, high = float(np.max(x[0])), float(np.min(x[-1]))
        x_stations = np.linspace(low, high, MASS_STATIONS_DEFAULT + 2)[1:-1]
    flux_density = np.asarray(gas.density(solution.q ** 2)) * solution.q * np.cos(solution.theta)
    fluxes = []
    for station in np.atleast_1d(x_stations):
        heights = np.array([np.interp(station, x[:, j], y[:, j]) for j in range(len(solution.psi))])
        values = np.array([np.interp(station, x[:, j], flux_density[:, j]) for j in range(len(solution.psi))])
        fluxes.append(float(integrate.trapezoid(values, heights)))
    fluxes = np.asarray(fluxes)
    mean = float(np.mean(fluxes))
    drift = float((fluxes.max() - fluxes.min()) / abs(mean)) if mean else 0.0
    return {"stations": [float(s) for s in np.atleast_1d(x_stations)], "fluxes": fluxes.tolist(),
            "relative_drift": drift}


def wall_image_error(solution, spec):
    """max |y(phi, m) - f(x(phi, m))| / f0 over the wall streamline."""
    if solution.x is None:
        raise ValueError("to_physical must run before wall_image_error")
    x_wall = np.clip(solution.x[:, -1], spec.l_minus, spec.l_plus)
    return max_norm(solution.y[:, -1] - spec.wall_height(x_wall)) / spec.f0


def write_vtk(solution, path):
    """Legacy-VTK ASCII structured grid of the physical mesh with q, theta, phi and psi as point data."""
    if solution.x is None:
        raise ValueError("to_physical must run before write_vtk")
    n_phi, n_psi = solution.q.shape
    count = n_phi * n_psi
    lines = ["# vtk DataFile Version 3.0",
             "transonic nozzle solution",
             "ASCII",
             "DATASET STRUCTURED_GRID",
             f"DIMENSIONS {n_phi} {n_psi} 1",
             f"POINTS {count} double"]
    # VTK orders points with the first dimension varying fastest
    x, y = solution.x.T.ravel(), solution.y.T.ravel()
    lines.extend(f"{a:.17g} {b:.17g} 0" for a, b in zip(x, y))
    lines.append(f"POINT_DATA {count}")
    phi, psi = np.meshgrid(solution.phi, solution.psi, indexing="ij")
    for name, values in (("q", solution.q), ("theta", solution.theta), ("phi", phi), ("psi", psi)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{value:.17g}" for value in values.T.ravel())
    with open(path, "w") as file:
        file.write("\n".join(lines) + "\n")
    return path
