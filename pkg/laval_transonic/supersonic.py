"""
Sonic-supersonic solver on [0, zeta_plus] x [0, m] for Q = A(q) <= 0:

    Q_phi_phi - (b(Q) Q_psi)_psi = 0,    Q = Q_phi = 0 at phi = 0,
    Q_psi = 0 at psi = 0,                Q_psi = wall datum at psi = m.

phi plays the role of time. In the Riemann invariants W = Q_phi - sqrt(b) Q_psi and
Z = -Q_phi - sqrt(b) Q_psi the problem is a pair of transport equations along dpsi/dphi = +-sqrt(b),
reflected into each other at psi = 0 (W + Z = 0) and psi = m (W + Z = h~). With the coefficients
frozen at a given Q~ the linear problem is solved by a contraction on the coupling terms; each sweep
is an upwind march in phi started with W = Z = 0 at the cutoff eps > 0 and stepped under a CFL limit,
with the stiff source terms applied through exponential integrating factors. The outer damped
fixed point updates Q~ and the downstream wall speed.
"""

import logging
import math

import numpy as np
from scipy import integrate
from scipy import interpolate

from . classes_fields import CharacteristicPath, SupersonicField
from . config import SolverConfig
from . constants import (CFL_COLLAPSE_FRACTION,
                         CONTRACTION_STALL_WINDOW,
                         MAX_BOUNCES,
                         SCALED_SEED_FACTOR,
                         WALL_SAMPLE_FACTOR)
from . error_processing import (BoundaryMapError,
                                CFLCollapseError,
                                CharacteristicTraceError,
                                ContractionStallError,
                                OuterDivergenceError,
                                SignViolationError)
from . gasmodel import SUPERSONIC
from . nozzle import build_maps, mass_flux
from . utilities import geometric_nodes, max_norm

logger = logging.getLogger(__name__)

PLUS = "plus"
MINUS = "minus"
FAMILIES = (PLUS, MINUS)

_DIVERGENCE_FACTOR = 1e3


def normalized_phi_grid(n_intervals, eps_fraction):
    """Node 0 followed by a geometric ladder from eps_fraction to 1."""
    return np.concatenate(([0.0], geometric_nodes(eps_fraction, 1.0, n_intervals)))


def seed_amplitude(spec, gas, m):
    """
    sigma of the power-law seed Q = -sigma phi^(lambda+2), from the flux balance
    d^2/dphi^2 integral of Q dpsi = -Theta' cos Theta / A_+^-1(Q) at the wall with Phi' ~ c*.
    """
    lam = spec.lambda_plus
    delta = 0.5 * (spec.delta1_plus + spec.delta2_plus)
    return delta / (m * gas.c_star ** (lam + 1.0) * (lam + 1.0) * (lam + 2.0))


def power_law_field(phi, psi, sigma, power, eps):
    Q = -sigma * np.power(phi, power)[:, None] * np.ones(len(psi))[None, :]
    return SupersonicField(phi=phi, psi=psi, Q=Q, eps=eps, scale_power=power)


def wall_source(maps, gas, Q_wall, phi):
    """
    h~(phi) = 2 Theta_+' cos Theta_+ / (sqrt(b(Q)) A_+^-1(Q)) at x = X_+(phi), Q = Q_wall(phi).

    Zero where the wall is straight; the value at phi = 0 is 0.
    """
    phi = np.asarray(phi, dtype=float)
    Q_wall = np.asarray(Q_wall, dtype=float)
    curvature = np.asarray(maps.wall_curvature_plus(phi), dtype=float)
    source = np.zeros_like(phi)
    active = (phi > 0.0) & (curvature != 0.0)
    if not np.any(active):
        return source
    if np.any(Q_wall[active] >= 0.0):
        worst = phi[active][np.argmax(Q_wall[active])]
        raise SignViolationError(f"wall value of Q must be negative beyond the sonic line; "
                                 f"Q >= 0 at phi={worst:.6g}")
    b = np.asarray(gas.b(Q_wall[active]))
    speed = np.asarray(gas.A_inv(Q_wall[active], SUPERSONIC))
    source[active] = 2.0 * curvature[active] / (np.sqrt(b) * speed)
    if np.any(source < 0.0):
        raise BoundaryMapError("negative wall source: the downstream wall geometry is corrupted")
    return source


class _Coefficients:
    """
    Frozen coefficients of the linear problem on the nodes from the cutoff on, in scaled form so that
    they interpolate linearly in phi between nodes:

        sqrt(b) phi^(p/4),   kappa phi,   h~ / phi^(5p/4 - 2),   with p the scale power.
    """

    __slots__ = {
        "phi": "Nodes from the cutoff on",
        "power": "Scale power p",
        "sqrt_b": "Scaled sqrt(b(Q~))",
        "kappa_w": "Scaled b^-1 p W~ / 4",
        "kappa_z": "Scaled b^-1 p Z~ / 4",
        "source": "Scaled h~",
    }

    def __init__(self, field, gas, source, sources):
        start = field.eps_index
        phi = field.phi[start:]
        Q = field.Q[start:]
        if np.any(Q >= 0.0):
            worst = phi[np.argmax(Q.max(axis=1))]
            raise SignViolationError(f"Q~ must be negative from the cutoff on; Q~ >= 0 at phi={worst:.6g}")
        b, p = gas.b_and_p(Q)
        sqrt_b = np.sqrt(b)
        power = field.scale_power
        self.phi = phi
        self.power = power
        self.sqrt_b = sqrt_b * np.power(phi, power / 4.0)[:, None]
        if sources:
            Q_phi = field.Q_phi()[start:]
            Q_psi = field.Q_psi()[start:]
            tilde_w = Q_phi - sqrt_b * Q_psi
            tilde_z = -Q_phi - sqrt_b * Q_psi
            self.kappa_w = 0.25 * p / b * tilde_w * phi[:, None]
            self.kappa_z = 0.25 * p / b * tilde_z * phi[:, None]
        else:
            self.kappa_w = np.zeros_like(Q)
            self.kappa_z = np.zeros_like(Q)
        self.source = np.asarray(source)[start:] / np.power(phi, 1.25 * power - 2.0)

    def at(self, index, theta, phi):
        """Unscaled coefficients at phi inside [phi[index], phi[index+1]], theta the blend weight."""
        def blend(values):
            return (1.0 - theta) * values[index] + theta * values[index + 1]
        sqrt_b = blend(self.sqrt_b) * phi ** (-self.power / 4.0)
        return (sqrt_b, blend(self.kappa_w) / phi, blend(self.kappa_z) / phi,
                blend(self.source) * phi ** (1.25 * self.power - 2.0))


class _MarchPlan:
    """
    The CFL-limited substeps of one march and everything about them that does not depend on the
    frozen coupling fields (w, z).
    """

    __slots__ = {
        "start": "Index of the cutoff node in the field's grid",
        "n_nodes": "Number of nodes of the field's phi-grid",
        "steps": "List of per-substep tuples",
        "power": "Scale power p",
        "phi": "Nodes from the cutoff on",
    }

    def __init__(self, field, coefficients, cfl):
        self.start = field.eps_index
        self.phi = coefficients.phi
        self.n_nodes = len(field.phi)
        self.power = coefficients.power
        psi_step = field.psi[1] - field.psi[0]
        phi = coefficients.phi
        self.steps = []
        for index in range(len(phi) - 1):
            left, right = phi[index], phi[index + 1]
            width = right - left
            current = left
            current_speed = coefficients.at(index, 0.0, left)[0]
            while current < right:
                end = right
                for _ in range(60):
                    theta = (end - left) / width
                    sqrt_b, kappa_w, kappa_z, source = coefficients.at(index, theta, end)
                    limit = cfl * psi_step / max(float(current_speed.max()), float(sqrt_b.max()))
                    if end - current <= limit * (1.0 + 1e-12):
                        break
                    end = current + limit
                if end - current < CFL_COLLAPSE_FRACTION * current:
                    raise CFLCollapseError(f"CFL step collapsed to {end - current:.3e} at phi={current:.6g}")
                step = end - current
                courant = sqrt_b * step / psi_step
                reached = index + 1 if end >= right else None
                self.steps.append((step, courant, np.exp(kappa_w * step), np.exp(-kappa_z * step), source,
                                   index, theta, end, reached))
                current = right if reached is not None else end
                current_speed = sqrt_b

    def _frozen(self, values, index, theta, end):
        # coupling fields interpolate in the scaled form values / phi^(p-1)
        left, right = self.phi[index], self.phi[index + 1]
        exponent = self.power - 1.0
        return ((1.0 - theta) * values[index] * (end / left) ** exponent
                + theta * values[index + 1] * (end / right) ** exponent)

    def march(self, w, z):
        """
        One sweep of the contraction: (W, Z) for frozen coupling fields (w, z) on the nodes.
        """
        W_out = np.zeros((self.n_nodes, w.shape[1]))
        Z_out = np.zeros_like(W_out)
        w = w[self.start:]
        z = z[self.start:]
        W = np.zeros(w.shape[1])
        Z = np.zeros(w.shape[1])
        for step, courant, grow_w, decay_z, source, index, theta, end, reached in self.steps:
            z_here = self._frozen(z, index, theta, end)
            w_here = self._frozen(w, index, theta, end)
            W_foot = W.copy()
            W_foot[1:] = (1.0 - courant[1:]) * W[1:] + courant[1:] * W[:-1]
            Z_foot = Z.copy()
            Z_foot[:-1] = (1.0 - courant[:-1]) * Z[:-1] + courant[:-1] * Z[1:]
            W = grow_w * W_foot + (grow_w - 1.0) * z_here
            Z = decay_z * Z_foot + (decay_z - 1.0) * w_here
            W[0] = -Z[0]
            Z[-1] = source - W[-1]
            if reached is not None:
                W_out[self.start + reached] = W
                Z_out[self.start + reached] = Z
        return W_out, Z_out


def _weighted_norm(values, phi, start, power):
    weights = np.power(phi[start:], power - 1.0)[:, None]
    return max_norm(values[start:] / weights)


def solve_linear(Q_tilde, maps, gas, eps, config=None, sources=True, initial=None, history=None,
                 source=None):
    """
    Solves the linear problem with coefficients frozen at the field Q_tilde, data W = Z = 0 at the
    cutoff `eps`, W + Z = 0 on the axis and W + Z = h~ on the wall; returns (W, Z) on the nodes.

    With sources=False the coupling coefficients are dropped and W, Z are pure reflected transport.
    `initial` optionally starts the contraction from a previous (W, Z); contraction residuals are
    appended to `history` when a list is given.
    """
    config = config if config is not None else SolverConfig()
    if abs(Q_tilde.eps - eps) > 1e-12 * max(eps, 1e-300):
        Q_tilde = SupersonicField(phi=Q_tilde.phi, psi=Q_tilde.psi, Q=Q_tilde.Q, eps=eps,
                                  scale_power=Q_tilde.scale_power)
    if source is None:
        source = wall_source(maps, gas, Q_tilde.wall_Q(), Q_tilde.phi)
    zeros = np.zeros_like(Q_tilde.Q)
    if not np.any(source):
        return zeros, zeros.copy()
    coefficients = _Coefficients(Q_tilde, gas, source, sources)
    plan = _MarchPlan(Q_tilde, coefficients, config.cfl)
    logger.debug(f"march plan: {len(plan.steps)} substeps over {len(Q_tilde.phi)} nodes")
    if initial is not None:
        w, z = (np.asarray(values, dtype=float) for values in initial)
    else:
        w, z = zeros, zeros.copy()
    start, power = plan.start, Q_tilde.scale_power
    if not sources:
        return plan.march(w, z)
    previous_change = None
    stalled = 0
    for iteration in range(1, config.max_contraction + 1):
        W, Z = plan.march(w, z)
        change = max(_weighted_norm(W - w, Q_tilde.phi, start, power),
                     _weighted_norm(Z - z, Q_tilde.phi, start, power))
        size = max(_weighted_norm(W, Q_tilde.phi, start, power), _weighted_norm(Z, Q_tilde.phi, start, power))
        ratio = change / previous_change if previous_change else None
        if history is not None:
            history.append({"contraction": iteration, "change": change, "ratio": ratio})
        logger.debug(f"contraction {iteration}: change {change:.3e}, ratio {ratio}")
        w, z = W, Z
        if change <= config.tol_contraction * max(size, np.finfo(float).tiny):
            return W, Z
        stalled = stalled + 1 if ratio is not None and ratio >= 1.0 else 0
        if stalled >= CONTRACTION_STALL_WINDOW:
            raise ContractionStallError(f"contraction ratio >= 1 for {stalled} iterations; zeta_plus is "
                                        "likely too large", history=history)
        previous_change = change
    raise ContractionStallError(f"contraction did not reach tolerance in {config.max_contraction} iterations",
                                history=history)


def integrate_Q(phi, psi, W, Z, eps, scale_power):
    """
    Q = Q(eps) + integral from eps of (W - Z)/2, with the power law Q(eps)(phi/eps)^p below the cutoff
    matched to the slope at eps. Where the marched data vanish at eps the slope is carried over from
    the next node by the same power law.
    """
    phi = np.asarray(phi, dtype=float)
    W = np.asarray(W, dtype=float)
    Z = np.asarray(Z, dtype=float)
    field = SupersonicField(phi=phi, psi=psi, Q=np.zeros_like(W), W=W, Z=Z, eps=eps, scale_power=scale_power)
    start = field.eps_index
    slope = 0.5 * (W - Z)
    if not np.any(slope[start:]):
        return field
    eps_slope = slope[start].copy()
    if start + 1 < len(phi):
        later = slope[start + 1:]
        first = np.argmax(later != 0.0, axis=0)
        columns = np.arange(later.shape[1])
        carried = later[first, columns] * (phi[start] / phi[start + 1 + first]) ** (scale_power - 1.0)
        eps_slope = np.where(eps_slope == 0.0, carried, eps_slope)
    Q_eps = phi[start] * eps_slope / scale_power
    Q = np.zeros_like(W)
    Q[start:] = Q_eps[None, :] + integrate.cumulative_trapezoid(slope[start:], phi[start:], axis=0, initial=0.0)
    if start > 0:
        Q[:start] = Q_eps[None, :] * np.power(phi[:start] / phi[start], scale_power)[:, None]
    tolerance = 1e-12 * max_norm(slope)
    if np.any(slope[start + 1:] > tolerance) or np.any(Q[start:] > 0.0):
        worst = np.unravel_index(np.argmax(slope[start:]), slope[start:].shape)
        raise SignViolationError(f"Q_phi must be negative downstream of the cutoff; Q_phi="
                                 f"{slope[start:][worst]:.3e} at phi={phi[start + worst[0]]:.6g}")
    field.Q = Q
    return field


def _sqrt_b_interpolator(field, gas):
    start = field.eps_index
    phi = field.phi[start:]
    Q = field.Q[start:]
    if np.any(Q >= 0.0):
        raise CharacteristicTraceError("characteristics need Q < 0 from the cutoff on")
    scaled = np.sqrt(np.asarray(gas.b(Q))) * np.power(phi, field.scale_power / 4.0)[:, None]
    table = interpolate.RegularGridInterpolator((phi, field.psi), scaled, bounds_error=False, fill_value=None)

    def sqrt_b(phi_value, psi_value):
        psi_value = min(max(psi_value, field.psi[0]), field.psi[-1])
        phi_value = max(phi_value, phi[0])
        return float(table((phi_value, psi_value))) * phi_value ** (-field.scale_power / 4.0)
    return sqrt_b


def trace_characteristic(field, start, family, gas=None, rtol=1e-9):
    """
    Traces dpsi/dphi = +sqrt(b(Q)) (family 'plus') or -sqrt(b(Q)) ('minus') backward in phi from
    `start` = (phi0, psi0) down to the cutoff, reflecting at psi = 0 and psi = m where the family flips.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    gas = gas if gas is not None else field.maps.gas
    phi0, psi0 = float(start[0]), float(start[1])
    top = field.m
    if not (field.eps < phi0 <= field.zeta_plus * (1.0 + 1e-12) and 0.0 <= psi0 <= top):
        raise CharacteristicTraceError(f"start ({phi0:.6g}, {psi0:.6g}) outside (eps, zeta_plus] x [0, m]")
    sqrt_b = _sqrt_b_interpolator(field, gas)
    phis, psis, bounces = [phi0], [psi0], []
    current_phi, current_psi, current = phi0, psi0, family
    if current == PLUS and current_psi <= 0.0:
        current = MINUS
    elif current == MINUS and current_psi >= top:
        current = PLUS
    while current_phi > field.eps:
        sign = 1.0 if current == PLUS else -1.0

        def slope(phi_value, state, sign=sign):
            return [sign * sqrt_b(phi_value, state[0])]

        # backward in phi a plus characteristic descends toward the axis, a minus one climbs to the wall
        if current == PLUS:
            def reflection(phi_value, state):
                return state[0]
        else:
            def reflection(phi_value, state):
                return state[0] - top
        reflection.terminal = True
        solution = integrate.solve_ivp(slope, (current_phi, field.eps), [current_psi], events=reflection,
                                       rtol=rtol, atol=1e-12 * top)
        if solution.status == -1:
            raise CharacteristicTraceError(f"integration failed at phi={solution.t[-1]:.6g}: {solution.message}")
        phis.extend(solution.t[1:].tolist())
        psis.extend(np.clip(solution.y[0, 1:], 0.0, top).tolist())
        if solution.status == 0:
            current_phi = field.eps
            break
        hit = float(solution.t_events[0][0])
        if not hit < current_phi:
            raise CharacteristicTraceError(f"no progress between reflections at phi={hit:.6g}")
        wall = "axis" if current == PLUS else "wall"
        bounces.append((hit, wall))
        if len(bounces) > MAX_BOUNCES:
            raise CharacteristicTraceError(f"more than {MAX_BOUNCES} reflections; last reached phi={hit:.6g}")
        current_phi = hit
        current_psi = 0.0 if current == PLUS else top
        phis[-1], psis[-1] = hit, current_psi
        current = MINUS if current == PLUS else PLUS
    return CharacteristicPath(phi=phis, psi=psis, family=family, bounces=bounces, terminated_at=current_phi)


def bounce_sum_oracle(path, source):
    """
    -sum of h~ over the wall reflections of a plus characteristic traced back from the wall: the
    wall value of W for the source-free problem with W = Z = 0 at the cutoff.
    """
    return -float(sum(source(phi) for phi in path.wall_bounces()))


def _straight_field(phi, psi, eps, power, maps, history):
    field = SupersonicField(phi=phi, psi=psi, Q=np.zeros((len(phi), len(psi))), eps=eps,
                            scale_power=power, maps=maps, wall_source=np.zeros(len(phi)), history=history,
                            outer_iterations=1)
    return field


def outer_fixed_point(spec, gas, config=None, snapshot=None):
    """
    Damped fixed point on Q~ and the downstream wall speed Q_+(x):

        build Phi_+, X_+, zeta_+ from Q_+, stretch Q~ to [0, zeta_+], solve the linear problem and
        integrate Q, read back Q_+(x) = A_+^-1(Q(Phi_+(x), m)).

    Q~ is stored on the unit-interval grid so that successive iterates keep their envelope. The
    first Q~ is the power-law field with amplitude `seed_amplitude`, scaled when
    `config.supersonic_seed` is "scaled".
    """
    config = config if config is not None else SolverConfig()
    m = mass_flux(spec, gas)
    power = spec.lambda_plus + 2.0
    unit = normalized_phi_grid(config.n_phi_plus, config.eps_cut_fraction)
    psi = np.linspace(0.0, m, config.n_psi + 1)
    x = np.linspace(0.0, spec.l_plus, WALL_SAMPLE_FACTOR * config.n_phi_plus + 1)
    wall_speed = np.full(len(x), gas.c_star)
    history = []
    maps = build_maps(spec, gas, q_wall_plus=(x, wall_speed))
    if not np.any(np.asarray(spec.wall_curvature(x))):
        history.append({"iteration": 1, "change": 0.0, "zeta_plus": maps.zeta_plus})
        phi = maps.zeta_plus * unit
        field = _straight_field(phi, psi, phi[1], power, maps, history)
        if snapshot is not None:
            snapshot(1, field)
        return field
    sigma = seed_amplitude(spec, gas, m)
    if config.supersonic_seed == "scaled":
        sigma *= SCALED_SEED_FACTOR
    Q_tilde = power_law_field(maps.zeta_plus * unit, psi, sigma, power, maps.zeta_plus * unit[1]).Q
    coupling = None
    for iteration in range(1, config.max_outer + 1):
        if iteration > 1:
            maps = build_maps(spec, gas, q_wall_plus=(x, wall_speed))
        phi = maps.zeta_plus * unit
        eps = phi[1]
        tilde = SupersonicField(phi=phi, psi=psi, Q=Q_tilde, eps=eps, scale_power=power)
        source = wall_source(maps, gas, tilde.wall_Q(), phi)
        inner = []
        W, Z = solve_linear(tilde, maps, gas, eps, config=config, initial=coupling, history=inner, source=source)
        coupling = (W, Z)
        field = integrate_Q(phi, psi, W, Z, eps, power)
        new_speed = gas.A_inv(np.minimum(field.Q_at(maps.Phi_plus(x), np.full(len(x), m)), 0.0), SUPERSONIC)
        size = max(max_norm(field.Q), np.finfo(float).tiny)
        change = max(max_norm(field.Q - Q_tilde) / size, max_norm(new_speed - wall_speed) / gas.c_star)
        history.append({"iteration": iteration, "change": change, "zeta_plus": maps.zeta_plus,
                        "contraction_iterations": len(inner),
                        "contraction_ratio": inner[-1]["ratio"] if inner else None})
        logger.info(f"supersonic outer iteration {iteration}: change {change:.3e}, zeta+={maps.zeta_plus:.10g}")
        field.maps = maps
        field.wall_source = source
        if snapshot is not None:
            snapshot(iteration, field)
        if change <= config.tol_outer:
            field.history = history
            field.outer_iterations = iteration
            return field
        if not math.isfinite(change) or change > _DIVERGENCE_FACTOR:
            break
        Q_tilde = Q_tilde + config.damping * (field.Q - Q_tilde)
        wall_speed = wall_speed + config.damping * (new_speed - wall_speed)
    raise OuterDivergenceError(f"supersonic fixed point did not converge in {len(history)} iterations "
                               f"(last change {history[-1]['change']:.3e})", history=history)
