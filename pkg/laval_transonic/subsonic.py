"""
Subsonic-sonic solver on [zeta_minus, 0] x [0, m_in]:

    A(q)_phi_phi + B(q)_psi_psi = 0,
    A(q)_phi = inlet datum at phi = zeta_minus,   B(q)_psi = 0 at psi = 0,
    B(q)_psi = wall datum at psi = m_in,          q = c at phi = 0.

The unknown is u = B(q) <= 0, so that A(q) = E(u). Each node owns a dual cell; the discrete equation is
the flux balance of the cell, with the Neumann data integrated exactly over the cell faces as
differences of turning angles. Newton's method with a sparse direct solve and a backtracking line
search drives the residual to zero.

The degenerate problem c = c* is reached by continuation in c, and the nonlocal boundary data are
updated by the damped outer fixed point `outer_fixed_point`.
"""

import logging

import numpy as np
from scipy import interpolate
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from . classes_fields import SubsonicField
from . config import SolverConfig
from . constants import (CONTINUATION_GAP,
                         DEPRESSED_SEED_CONSTANT,
                         DEPRESSED_SEED_FLOOR,
                         JACOBIAN_DIFFUSION_FLOOR,
                         LINE_SEARCH_MIN_STEP,
                         SUBSONIC_EXCURSION,
                         WALL_SAMPLE_FACTOR)
from . error_processing import (GasDomainError,
                                InnerSolveError,
                                OuterDivergenceError,
                                SubsonicityLostError,
                                log_nonfatal_error)
from . gasmodel import SUBSONIC
from . nozzle import build_maps, mass_flux
from . utilities import dual_faces, dual_widths, graded_nodes, max_norm

logger = logging.getLogger(__name__)

# Outer iterations whose change exceeds this multiple of c* are treated as diverged
_DIVERGENCE_FACTOR = 1e3


def phi_grid(zeta_minus, n_intervals, grading_ratio):
    """phi-nodes from zeta_minus to 0, finest next to the sonic line."""
    return zeta_minus * graded_nodes(n_intervals, grading_ratio)[::-1]


def psi_grid(m_in, n_intervals):
    return np.linspace(0.0, m_in, n_intervals + 1)


def default_schedule(gas, gap=CONTINUATION_GAP):
    """
    c_k = c*(1 - 2^-k / 3), k = 1, 2, ..., up to the first value within gap * c* of c*.
    """
    schedule = []
    k = 1
    while True:
        c = gas.c_star * (1.0 - 2.0 ** -k / 3.0)
        schedule.append(c)
        if gas.c_star - c < gap * gas.c_star:
            return schedule
        k += 1


class _Discretization:
    """
    Grid geometry and cell-integrated Neumann data of one inner problem.
    """

    __slots__ = {
        "gas": "GasModel",
        "phi": "phi nodes, zeta_minus ... 0",
        "psi": "psi nodes, 0 ... m_in",
        "phi_widths": "Dual-cell widths in phi",
        "psi_widths": "Dual-cell widths in psi",
        "phi_steps": "phi spacings",
        "psi_step": "Uniform psi spacing",
        "inlet_data": "Integral of the inlet datum over each psi dual cell",
        "wall_data": "Integral of the wall datum over each phi dual cell",
        "turning": "Total turning of the wall, the residual scale",
    }

    def __init__(self, maps, phi, psi):
        self.gas = maps.gas
        self.phi = phi
        self.psi = psi
        self.phi_widths = dual_widths(phi)
        self.psi_widths = dual_widths(psi)
        self.phi_steps = np.diff(phi)
        self.psi_step = psi[1] - psi[0]
        left, right = dual_faces(psi)
        inlet_turning = maps.inlet_turning
        self.inlet_data = np.asarray(inlet_turning(left)) - np.asarray(inlet_turning(right))
        left, right = dual_faces(phi)
        wall_turning = maps.wall_turning_minus
        self.wall_data = np.asarray(wall_turning(right)) - np.asarray(wall_turning(left))
        self.turning = float(maps.spec.total_turning)

    @property
    def n_phi(self):
        return len(self.phi) - 1

    @property
    def n_psi(self):
        return len(self.psi) - 1

    @property
    def has_no_data(self):
        return not (np.any(self.inlet_data) or np.any(self.wall_data))

    def potential(self, u):
        """
        A = E(u) and dA/du, continued to u > 0 as the odd extension E(u) = -E(-u) so that the discrete
        operator stays monotone through excursions of a Newton iterate.
        """
        magnitude = -np.abs(u)
        value = self.gas.E_upto_sonic(magnitude)
        slope = np.maximum(self.gas.E_prime_upto_sonic(magnitude), JACOBIAN_DIFFUSION_FLOOR)
        return np.where(u > 0.0, -value, value), slope

    def residual(self, u):
        """Flux balance of the cells of rows 0 .. N-1; row N carries the Dirichlet value."""
        A, _ = self.potential(u)
        n = self.n_phi
        residual = np.zeros((n, self.n_psi + 1))
        face = (A[1:] - A[:-1]) / self.phi_steps[:, None] * self.psi_widths[None, :]
        residual += face
        residual[1:] -= face[:-1]
        residual[0] -= self.inlet_data
        across = (u[:n, 1:] - u[:n, :-1]) / self.psi_step * self.phi_widths[:n, None]
        residual[:, :-1] += across
        residual[:, 1:] -= across
        residual[:, -1] += self.wall_data[:n]
        return residual

    def jacobian(self, u):
        _, slope = self.potential(u)
        n, width = self.n_phi, self.n_psi + 1
        index = np.arange(n * width).reshape(n, width)
        rows, cols, vals = [], [], []

        def couple(row, col, value):
            rows.append(row.ravel())
            cols.append(col.ravel())
            vals.append(value.ravel())

        face = self.psi_widths[None, :] / self.phi_steps[:, None] * np.ones((n, width))
        # face i+1/2 between rows i and i+1; row N is not an unknown
        couple(index, index, -face * slope[:n])
        if n > 1:
            couple(index[:-1], index[1:], face[:-1] * slope[1:n])
            couple(index[1:], index[:-1], face[:-1] * slope[:n - 1])
            couple(index[1:], index[1:], -face[:-1] * slope[1:n])
        across = np.broadcast_to(self.phi_widths[:n, None] / self.psi_step, (n, width - 1))
        couple(index[:, :-1], index[:, 1:], across)
        couple(index[:, :-1], index[:, :-1], -across)
        couple(index[:, 1:], index[:, :-1], across)
        couple(index[:, 1:], index[:, 1:], -across)
        matrix = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                   shape=(n * width, n * width))
        return matrix.tocsc()


def _newton(disc, u, config, c):
    """
    Damped Newton iteration on the unknown rows of u; returns (u, iterations, history).
    """
    gas = disc.gas
    scale = disc.turning if disc.turning > 0.0 else 1.0
    tolerance = config.tol_inner * scale
    lowest = float(gas.B(gas.c_star * 1e-6))
    residual = disc.residual(u)
    norm = max_norm(residual)
    history = [{"newton": 0, "residual": norm, "step": 0.0}]
    n = disc.n_phi
    for iteration in range(1, config.max_newton + 1):
        if norm <= tolerance:
            return u, iteration - 1, history
        direction = sparse_linalg.spsolve(disc.jacobian(u), -residual.ravel()).reshape(residual.shape)
        if not np.all(np.isfinite(direction)):
            raise InnerSolveError(f"singular Newton system at c={c:.12g}", history=history)
        step = 1.0
        while True:
            trial = u.copy()
            trial[:n] = u[:n] + step * direction
            if trial.min() >= lowest:
                try:
                    trial_residual = disc.residual(trial)
                except GasDomainError:
                    trial_residual = None
                if trial_residual is not None:
                    trial_norm = max_norm(trial_residual)
                    if trial_norm <= (1.0 - 1e-4 * step) * norm or trial_norm <= tolerance:
                        break
            step *= 0.5
            if step < LINE_SEARCH_MIN_STEP:
                raise InnerSolveError(f"line search failed at c={c:.12g} after {iteration} Newton steps",
                                      history=history)
        u, residual, norm = trial, trial_residual, trial_norm
        history.append({"newton": iteration, "residual": norm, "step": step})
        logger.debug(f"newton {iteration} at c={c:.12g}: residual {norm:.3e}, step {step:g}")
    if norm <= tolerance:
        return u, config.max_newton, history
    raise InnerSolveError(f"Newton iteration did not converge at c={c:.12g} within {config.max_newton} steps",
                          history=history)


def _solve(maps, gas, c, phi, psi, config, initial=None):
    disc = _Discretization(maps, phi, psi)
    shape = (len(phi), len(psi))
    if disc.has_no_data:
        return SubsonicField(phi=phi, psi=psi, q=np.full(shape, c), c=c, maps=maps)
    if initial is None:
        q_initial = np.full(shape, c)
    else:
        q_initial = np.minimum(np.asarray(initial, dtype=float), gas.c_star)
        q_initial[-1, :] = c
    u = np.asarray(gas.B(q_initial), dtype=float)
    u[-1, :] = gas.B(c)
    u, iterations, history = _newton(disc, u, config, c)
    q = gas.c_star + np.asarray(gas.B_inv_offset(u))
    excursion = q.max() - gas.c_star
    if excursion > SUBSONIC_EXCURSION * gas.c_star:
        worst = np.unravel_index(np.argmax(q), q.shape)
        raise SubsonicityLostError(f"q exceeds c* by {excursion:.3e} at phi={phi[worst[0]]:.6g}, "
                                   f"psi={psi[worst[1]]:.6g} (c={c:.12g})", history=history)
    q = np.minimum(q, gas.c_star)
    q[-1, :] = c
    return SubsonicField(phi=phi, psi=psi, q=q, c=c, maps=maps, newton_iterations=iterations, history=history)


def _grid(maps, config):
    return (phi_grid(maps.zeta_minus, config.n_phi_minus, config.grading_ratio),
            psi_grid(maps.m_in, config.n_psi))


def solve_regularized(maps, gas, c, config=None, initial=None):
    """
    Solves the strictly elliptic problem with outlet value 0 < c < c*.

    `initial` optionally supplies a starting speed field on the same grid.
    """
    config = config if config is not None else SolverConfig()
    if not 0.0 < c < gas.c_star:
        raise GasDomainError(f"regularized outlet value must lie in (0, c*), got {c}")
    phi, psi = _grid(maps, config)
    return _solve(maps, gas, c, phi, psi, config, initial)


def continue_to_sonic(maps, gas, schedule=None, config=None, initial=None):
    """
    Runs warm-started regularized solves along the increasing `schedule` of outlet values. When the
    schedule ends within the continuation gap of c*, the last two fields are extrapolated linearly to
    c = c* and a closing solve of the degenerate problem follows; otherwise the last field is returned.
    """
    config = config if config is not None else SolverConfig()
    if schedule is None:
        schedule = config.schedule if config.schedule is not None else default_schedule(gas)
    phi, psi = _grid(maps, config)
    fields = []
    stages = []
    previous = initial
    for c in schedule:
        if fields:
            guess = fields[-1].q - fields[-1].c + c
        else:
            guess = previous
        field = _solve(maps, gas, c, phi, psi, config, guess)
        fields.append(field)
        stages.append({"c": c, "newton_iterations": field.newton_iterations,
                       "residual": field.history[-1]["residual"] if field.history else 0.0})
        logger.info(f"continuation c={c:.12g}: {field.newton_iterations} Newton steps")
    if gas.c_star - schedule[-1] >= CONTINUATION_GAP * gas.c_star:
        log_nonfatal_error(f"continuation schedule ends at c={schedule[-1]:.12g}, short of c*; "
                           "returning the regularized field")
        fields[-1].history = stages
        return fields[-1]
    if len(fields) > 1:
        last, before = fields[-1], fields[-2]
        weight = (gas.c_star - last.c) / (last.c - before.c)
        guess = last.q + weight * (last.q - before.q)
    else:
        guess = fields[-1].q - fields[-1].c + gas.c_star
    field = _solve(maps, gas, gas.c_star, phi, psi, config, guess)
    stages.append({"c": gas.c_star, "newton_iterations": field.newton_iterations,
                   "residual": field.history[-1]["residual"] if field.history else 0.0})
    field.history = stages
    return field


def _seed_speeds(spec, gas, config, count):
    if config.subsonic_seed == "depressed":
        value = gas.c_star - DEPRESSED_SEED_CONSTANT * abs(spec.l_minus) ** (spec.lambda_minus / 2.0 + 1.0)
        return np.full(count, max(value, DEPRESSED_SEED_FLOOR * gas.c_star))
    return np.full(count, gas.c_star)


def _read_back(field, nodes, positions, row):
    values = field.q[:, -1] if row == "wall" else field.q[0, :]
    speeds = interpolate.PchipInterpolator(nodes, values)(np.clip(positions, nodes[0], nodes[-1]))
    return np.minimum(speeds, field.maps.gas.c_star)


def outer_fixed_point(spec, gas, config=None, snapshot=None):
    """
    Damped fixed point on the inlet speed Q_in(y) and the upstream wall speed Q_-(x):

        build the boundary maps from the current speeds, solve the degenerate problem, read back
        Q_in(y) = q(zeta_minus, Psi_in(y)) and Q_-(x) = q(Phi_-(x), m_in).

    The first pass runs the whole continuation; later passes start the closing solve from the
    previous field. `snapshot`, when given, is called with (iteration, field) after each pass.
    """
    config = config if config is not None else SolverConfig()
    m = mass_flux(spec, gas)
    y = np.linspace(0.0, spec.inlet_height, WALL_SAMPLE_FACTOR * config.n_psi + 1)
    x = np.linspace(spec.l_minus, 0.0, WALL_SAMPLE_FACTOR * config.n_phi_minus + 1)
    q_in = _seed_speeds(spec, gas, config, len(y))
    q_wall = _seed_speeds(spec, gas, config, len(x))
    q_wall[-1] = gas.c_star
    history = []
    field = None
    for iteration in range(1, config.max_outer + 1):
        maps = build_maps(spec, gas, q_in=(y, q_in), q_wall_minus=(x, q_wall))
        if field is None:
            field = continue_to_sonic(maps, gas, config=config)
        else:
            phi, psi = _grid(maps, config)
            field = _solve(maps, gas, gas.c_star, phi, psi, config, field.q)
        new_in = _read_back(field, field.psi, maps.Psi_in(y), "inlet")
        new_wall = _read_back(field, field.phi, maps.Phi_minus(x), "wall")
        change = max(max_norm(new_in - q_in), max_norm(new_wall - q_wall))
        entry = {"iteration": iteration, "change": change, "m_in": maps.m_in,
                 "zeta_minus": maps.zeta_minus, "mass_flux_mismatch": abs(maps.m_in - m) / m}
        history.append(entry)
        logger.info(f"subsonic outer iteration {iteration}: change {change:.3e}, m_in={maps.m_in:.10g}")
        if snapshot is not None:
            snapshot(iteration, field)
        if change <= config.tol_outer:
            field.outer_iterations = iteration
            field.history = history
            return field
        if not np.isfinite(change) or change > _DIVERGENCE_FACTOR * gas.c_star:
            break
        q_in = q_in + config.damping * (new_in - q_in)
        q_wall = q_wall + config.damping * (new_wall - q_wall)
    raise OuterDivergenceError(f"subsonic fixed point did not converge in {len(history)} iterations "
                               f"(last change {history[-1]['change']:.3e})", history=history)


#   BARRIERS AND FLUX BOOKKEEPING

def supersolution_barrier(phi, psi, gas, m_in, eps0=None):
    """
    q+ = 2c*/3 - 2 phi - phi^2 + eps0 psi^2, an upper barrier of the regularized problem with
    c <= c*/2 on short nozzles. eps0 defaults to min(c*/(12 m_in^2), inf A'/B' over (c*/2, 5c*/6)).
    """
    if eps0 is None:
        ladder = np.linspace(0.5 * gas.c_star, 5.0 * gas.c_star / 6.0, 257)
        ratio = np.asarray(gas.A_prime(ladder)) / np.asarray(gas.B_prime(ladder))
        eps0 = min(gas.c_star / (12.0 * m_in ** 2), float(ratio.min()))
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    return 2.0 * gas.c_star / 3.0 - 2.0 * phi - phi * phi + eps0 * psi * psi


def subsolution_barrier(phi, gas, c, mu2):
    """q- = A_-^-1(A(c) + mu2 phi), a lower barrier when mu2 bounds the inlet datum."""
    phi = np.asarray(phi, dtype=float)
    return gas.A_inv(np.minimum(gas.A(c) + mu2 * phi, 0.0), SUBSONIC)


def subsolution_slope(field):
    """
    Smallest mu2 for which `subsolution_barrier` is a discrete subsolution on the field's grid:
    the largest cell average of the inlet datum.
    """
    disc = _Discretization(field.maps, field.phi, field.psi)
    return max(float(np.max(disc.inlet_data / disc.psi_widths)), 0.0)


def flux_balance(field):
    """
    Discrete global flux bookkeeping: the turning through the inlet and along the wall, and the
    flux of A(q) through the sonic line, which vanishes for a solved field.
    """
    disc = _Discretization(field.maps, field.phi, field.psi)
    u = np.asarray(disc.gas.B(field.q), dtype=float)
    A, _ = disc.potential(u)
    last_face = float(np.sum((A[-1] - A[-2]) / disc.phi_steps[-1] * disc.psi_widths))
    outflow = last_face - float(disc.wall_data[-1])
    inlet_turning = float(np.sum(disc.inlet_data))
    wall_turning = float(np.sum(disc.wall_data))
    scale = max(inlet_turning, wall_turning, np.finfo(float).tiny)
    return {
        "inlet_turning": inlet_turning,
        "wall_turning": wall_turning,
        "sonic_outflow": outflow,
        "relative_imbalance": abs(outflow) / scale if scale > np.finfo(float).tiny else 0.0,
    }
