"""
Diagnostics on a speed field sampled on a rectilinear potential-plane grid: extraction and
classification of the sonic set q = c*, its decomposition into the parts S_-, S_e and S_+,
characteristics issued from sonic points, conservation of the Riemann invariants theta -+ H(q)
along traced characteristics, and the wall-curvature necessary condition.

A sonic point is exceptional exactly when q_psi vanishes there. Along the sonic curve, ordered
from the axis psi = 0 to the wall psi = m, the exceptional points form one segment S_e, flanked by
S_- below (phi increasing along the curve) and S_+ above (phi decreasing).
"""

import logging

import numpy as np
from scipy import integrate
from scipy import interpolate

from . assembly import integrate_theta
from . classes_fields import CharacteristicPath, PotentialPlaneField, SupersonicField, TransonicSolution
from . constants import (EXCEPTIONAL_TOL_FACTOR,
                         EXCEPTIONAL_TOL_FLOOR,
                         SUPERSONIC_MARGIN,
                         VALIDATION_SAMPLES)
from . error_processing import (ClassificationMismatchError,
                                CharacteristicTraceError,
                                SonicSetError)
from . supersonic import MINUS, PLUS, FAMILIES, trace_characteristic

logger = logging.getLogger(__name__)

EXCEPTIONAL = "exceptional"
NONEXCEPTIONAL = "nonexceptional"

SEGMENT_MINUS = "S_minus"
SEGMENT_EXCEPTIONAL = "S_e"
SEGMENT_PLUS = "S_plus"

# Relative size below which q - c* counts as zero at a grid node
_SONIC_NODE_TOLERANCE = 1e-13


class SonicPoint:
    __slots__ = {
        "phi": "phi of the point",
        "psi": "psi of the point",
        "q_psi": "Interpolated q_psi at the point",
        "tolerance": "Exceptional-point tolerance used at the point",
        "classification": "EXCEPTIONAL or NONEXCEPTIONAL",
        "spacing": "Local phi grid spacing",
    }

    def __init__(self, *, phi, psi, q_psi, tolerance, classification, spacing):
        self.phi = float(phi)
        self.psi = float(psi)
        self.q_psi = float(q_psi)
        self.tolerance = float(tolerance)
        self.classification = classification
        self.spacing = float(spacing)

    @property
    def is_exceptional(self):
        return self.classification == EXCEPTIONAL

    def as_dict(self):
        return {"phi": self.phi, "psi": self.psi, "q_psi": self.q_psi, "tolerance": self.tolerance,
                "classification": self.classification}


class SonicDiagnostics:
    """
    Classified sonic points ordered along the sonic curve, with the segment decomposition and the
    reports the other diagnostics attach.
    """

    __slots__ = {
        "sonic_points": "List of SonicPoint ordered by psi, then phi",
        "segments": "Dict segment name -> list of indices into sonic_points",
        "segments_contiguous": "Whether the exceptional indices form one contiguous range",
        "invariant_drift": "Riemann-invariant drift report, None until computed",
        "curvature_report": "Wall-curvature check report, None until computed",
        "streamline_curvature": "Signs of theta_phi along the streamlines, None until computed",
    }

    def __init__(self, *, sonic_points, segments, segments_contiguous):
        self.sonic_points = list(sonic_points)
        self.segments = segments
        self.segments_contiguous = segments_contiguous
        self.invariant_drift = None
        self.curvature_report = None
        self.streamline_curvature = None

    def exceptional_points(self):
        return [point for point in self.sonic_points if point.is_exceptional]

    def exceptional_fraction(self):
        return len(self.exceptional_points()) / len(self.sonic_points)

    def segment_points(self, name):
        return [self.sonic_points[index] for index in self.segments[name]]

    def segments_ordered(self):
        """S_- indices precede S_e indices, which precede S_+ indices."""
        order = [self.segments[SEGMENT_MINUS], self.segments[SEGMENT_EXCEPTIONAL], self.segments[SEGMENT_PLUS]]
        present = [indices for indices in order if indices]
        return all(max(first) < min(second) for first, second in zip(present[:-1], present[1:]))

    def as_dict(self):
        return {
            "sonic_points": [point.as_dict() for point in self.sonic_points],
            "exceptional_fraction": self.exceptional_fraction(),
            "segments": {name: list(indices) for name, indices in self.segments.items()},
            "segments_contiguous": self.segments_contiguous,
            "segments_ordered": self.segments_ordered(),
            "invariant_drift": self.invariant_drift,
            "curvature_report": self.curvature_report,
            "streamline_curvature": self.streamline_curvature,
        }


def _as_potential_field(field, gas=None):
    if isinstance(field, PotentialPlaneField):
        return field
    if isinstance(field, SupersonicField):
        if gas is None:
            raise ValueError("a SupersonicField needs the gas model to produce speeds")
        return field.to_potential_field(gas)
    return field.to_potential_field()


def _crossings(values, coordinates, zero):
    """Positions along one grid line where `values` vanishes: zero nodes and interpolated sign changes."""
    found = []
    is_zero = np.abs(values) <= zero
    for index in np.flatnonzero(is_zero):
        found.append((float(coordinates[index]), int(index), True))
    for index in range(len(values) - 1):
        left, right = values[index], values[index + 1]
        if is_zero[index] or is_zero[index + 1] or left * right > 0.0:
            continue
        weight = left / (left - right)
        found.append((float(coordinates[index] + weight * (coordinates[index + 1] - coordinates[index])),
                      int(index), False))
    return found


def _local_spacing(nodes, position):
    index = int(np.clip(np.searchsorted(nodes, position) - 1, 0, len(nodes) - 2))
    return float(nodes[index + 1] - nodes[index])


def extract_sonic_points(field, c_star):
    """
    The level set q = c* by linear interpolation of q - c* along the psi = const and phi = const grid
    lines. Returns (phi, psi) pairs ordered by psi, then phi.
    """
    offset = field.q - c_star
    zero = _SONIC_NODE_TOLERANCE * c_star
    points = set()
    for j, psi_value in enumerate(field.psi):
        for phi_value, index, on_node in _crossings(offset[:, j], field.phi, zero):
            points.add((phi_value, float(psi_value)))
    for i, phi_value in enumerate(field.phi):
        for psi_value, index, on_node in _crossings(offset[i, :], field.psi, zero):
            if not on_node:
                points.add((float(phi_value), psi_value))
    return sorted(points, key=lambda point: (point[1], point[0]))


def _segments(points):
    """Splits the ordered sonic points into S_-, S_e and S_+ by position relative to the exceptional run."""
    exceptional = [index for index, point in enumerate(points) if point.is_exceptional]
    segments = {SEGMENT_MINUS: [], SEGMENT_EXCEPTIONAL: exceptional, SEGMENT_PLUS: []}
    if exceptional:
        first, last = exceptional[0], exceptional[-1]
        contiguous = exceptional == list(range(first, last + 1))
        segments[SEGMENT_MINUS] = [index for index in range(first) if not points[index].is_exceptional]
        segments[SEGMENT_PLUS] = [index for index in range(last + 1, len(points))
                                  if not points[index].is_exceptional]
        return segments, contiguous
    # without exceptional points the whole curve is S_+ (phi decreasing toward the wall) or S_-
    trend = points[-1].phi - points[0].phi if len(points) > 1 else 0.0
    segments[SEGMENT_PLUS if trend <= 0.0 else SEGMENT_MINUS] = list(range(len(points)))
    return segments, True


def classify_sonic_points(field, gas, tol=None):
    """
    Extracts the sonic set of `field` and flags each point exceptional iff |q_psi| <= tol there.

    Without an explicit `tol` the tolerance at each point is EXCEPTIONAL_TOL_FACTOR times the local
    error estimate h_psi |q_psi_psi| + h_phi |q_psi_phi| of the interpolated q_psi, floored at
    EXCEPTIONAL_TOL_FLOOR max |q_psi|.
    """
    field = _as_potential_field(field, gas)
    locations = extract_sonic_points(field, gas.c_star)
    if not locations:
        raise SonicSetError(f"no sonic level set q = c* = {gas.c_star:.10g} in the field "
                            f"(q ranges over [{np.min(field.q):.10g}, {np.max(field.q):.10g}])")
    q_psi = field.q_psi()
    grid = (field.phi, field.psi)
    q_psi_at = interpolate.RegularGridInterpolator(grid, q_psi)
    coordinates = np.array(locations)
    values = q_psi_at(coordinates)
    if tol is None:
        h_psi = np.gradient(field.psi)[None, :]
        h_phi = np.gradient(field.phi)[:, None]
        estimate = (h_psi * np.abs(np.gradient(q_psi, field.psi, axis=1))
                    + h_phi * np.abs(np.gradient(q_psi, field.phi, axis=0)))
        tolerances = EXCEPTIONAL_TOL_FACTOR * interpolate.RegularGridInterpolator(grid, estimate)(coordinates)
        tolerances = np.maximum(tolerances, EXCEPTIONAL_TOL_FLOOR * float(np.max(np.abs(q_psi))))
    else:
        tolerances = np.full(len(locations), float(tol))
    points = [SonicPoint(phi=phi, psi=psi, q_psi=value, tolerance=tolerance,
                         classification=EXCEPTIONAL if abs(value) <= tolerance else NONEXCEPTIONAL,
                         spacing=_local_spacing(field.phi, phi))
              for (phi, psi), value, tolerance in zip(locations, values, tolerances)]
    segments, contiguous = _segments(points)
    diagnostics = SonicDiagnostics(sonic_points=points, segments=segments, segments_contiguous=contiguous)
    logger.info(f"{len(points)} sonic points, {len(segments[SEGMENT_EXCEPTIONAL])} exceptional")
    return diagnostics


def _speed_interpolator(field):
    return interpolate.RegularGridInterpolator((field.phi, field.psi), field.q, bounds_error=False,
                                               fill_value=None)


def trace_in_psi(field, gas, start, direction, psi_end, speed=None):
    """
    Integrates dphi/dpsi = direction * beta(q(phi, psi)) from `start` to psi = psi_end, with
    beta = sqrt(-A'/B') taken as 0 where q <= c*.
    """
    speed = speed if speed is not None else _speed_interpolator(field)
    low, high = field.phi[0], field.phi[-1]

    def slope(psi_value, state):
        phi_value = min(max(state[0], low), high)
        q = float(speed((phi_value, psi_value)))
        return [direction * float(gas.characteristic_slope(max(q, gas.c_star)))]

    phi0, psi0 = start
    if psi_end == psi0:
        return np.array([phi0]), np.array([psi0])
    max_step = float(np.min(np.diff(field.psi)))
    solution = integrate.solve_ivp(slope, (psi0, psi_end), [phi0], rtol=1e-9, atol=1e-12, max_step=max_step)
    if solution.status == -1:
        raise CharacteristicTraceError(f"characteristic from ({phi0:.6g}, {psi0:.6g}) failed: {solution.message}")
    return solution.y[0], solution.t


class SonicCharacteristics:
    """Characteristics issued from one sonic point."""

    __slots__ = {
        "point": "The SonicPoint",
        "coincident": "True when both families stay on the sonic line",
        "paths": "Dict family -> CharacteristicPath (phi, psi samples)",
        "separation": "phi-distance between the two families at the end of the traced span",
        "osgood_constant": "Estimate of M in beta(q(phi, psi0)) <= M |phi - phi0| near the point",
    }

    def __init__(self, *, point, coincident, paths, separation, osgood_constant):
        self.point = point
        self.coincident = coincident
        self.paths = paths
        self.separation = separation
        self.osgood_constant = osgood_constant

    def as_dict(self):
        return {"point": self.point.as_dict(), "coincident": self.coincident, "separation": self.separation,
                "osgood_constant": self.osgood_constant}


def _osgood_constant(field, gas, point, speed):
    """max of beta(q(phi, psi0)) / |phi - phi0| over the grid nodes within a few cells of the point."""
    index = int(np.searchsorted(field.phi, point.phi))
    neighbours = field.phi[max(index - 4, 0):index + 5]
    neighbours = neighbours[np.abs(neighbours - point.phi) > 0.0]
    if len(neighbours) == 0:
        return 0.0
    q = speed(np.column_stack((neighbours, np.full(len(neighbours), point.psi))))
    beta = np.asarray(gas.characteristic_slope(np.maximum(q, gas.c_star)))
    return float(np.max(beta / np.abs(neighbours - point.phi)))


def characteristics_from_sonic(field, point, gas, family=None, span=None):
    """
    Traces the characteristics issued from a classified sonic point over a psi-span (default a quarter
    of the psi-extent, clipped to the grid). At an exceptional point both families must stay on the
    sonic line; at a nonexceptional point they separate, toward increasing psi when q_psi > 0.

    Raises ClassificationMismatchError when the traced behaviour contradicts the classification.
    """
    field = _as_potential_field(field, gas)
    families = FAMILIES if family is None else (family,)
    speed = _speed_interpolator(field)
    extent = field.psi[-1] - field.psi[0]
    span = 0.25 * extent if span is None else span
    direction = 1.0 if point.q_psi >= 0.0 else -1.0
    psi_end = float(np.clip(point.psi + direction * span, field.psi[0], field.psi[-1]))
    if psi_end == point.psi:
        direction = -direction
        psi_end = float(np.clip(point.psi + direction * span, field.psi[0], field.psi[-1]))
    paths = {}
    for name in families:
        sign = 1.0 if name == PLUS else -1.0
        phi, psi = trace_in_psi(field, gas, (point.phi, point.psi), sign * direction, psi_end, speed=speed)
        paths[name] = CharacteristicPath(phi=phi, psi=psi, family=name, bounces=[], terminated_at=phi[-1])
    ends = [path.phi[-1] for path in paths.values()]
    if len(ends) == 2:
        separation = abs(ends[0] - ends[1])
    else:
        separation = abs(ends[0] - point.phi)
    coincident = all(np.max(np.abs(path.phi - point.phi)) <= 0.5 * point.spacing for path in paths.values())
    result = SonicCharacteristics(point=point, coincident=coincident, paths=paths, separation=float(separation),
                                  osgood_constant=_osgood_constant(field, gas, point, speed))
    if point.is_exceptional and not coincident:
        raise ClassificationMismatchError(f"exceptional point ({point.phi:.6g}, {point.psi:.6g}) issues "
                                          f"characteristics leaving the sonic line (separation {separation:.3e})")
    if not point.is_exceptional and separation == 0.0:
        raise ClassificationMismatchError(f"nonexceptional point ({point.phi:.6g}, {point.psi:.6g}) issues "
                                          f"coincident characteristics")
    return result


def _supersonic_part(solution, gas):
    """(SupersonicField, theta on its grid) of a TransonicSolution or a bare SupersonicField."""
    if isinstance(solution, TransonicSolution):
        if solution.theta is None:
            theta, _ = integrate_theta(solution.phi, solution.psi, solution.q, gas, solution.sonic_index)
        else:
            theta = solution.theta
        return solution.sup, theta[solution.sonic_index:]
    if isinstance(solution, SupersonicField):
        theta, _ = integrate_theta(solution.phi, solution.psi, solution.speed(gas), gas, 0)
        return solution, theta
    raise TypeError(f"expected a TransonicSolution or SupersonicField, got {type(solution).__name__}")


def default_drift_starts(field, count):
    """`count` points on phi = zeta_plus/2 spread over the interior of [0, m]."""
    psi = np.linspace(0.0, field.m, count + 2)[1:-1]
    return [(0.5 * field.zeta_plus, value) for value in psi]


def riemann_invariant_drift(solution, starts, family, gas, margin=SUPERSONIC_MARGIN):
    """
    Traces characteristics of `family` backward from each start and reports the drift of
    theta - H(q) (plus family) or theta + H(q) (minus family) along the path up to its first
    reflection, relative to max H(q) over the supersonic field.

    Raises CharacteristicTraceError when a path leaves the region q > c*(1 + margin).
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    field, theta = _supersonic_part(solution, gas)
    q = field.speed(gas)
    H = np.asarray(gas.H(np.maximum(q, gas.c_star)))
    grid = (field.phi, field.psi)
    theta_at = interpolate.RegularGridInterpolator(grid, theta)
    H_at = interpolate.RegularGridInterpolator(grid, H)
    q_at = interpolate.RegularGridInterpolator(grid, q)
    scale = max(float(np.max(np.abs(H))), np.finfo(float).tiny)
    sign = -1.0 if family == PLUS else 1.0
    paths = []
    for start in starts:
        path = trace_characteristic(field, start, family, gas=gas)
        end = len(path.phi)
        if path.bounces:
            end = int(np.searchsorted(-path.phi, -path.bounces[0][0], side="right"))
        points = np.column_stack((path.phi[:end], path.psi[:end]))
        speeds = q_at(points)
        if np.any(speeds <= gas.c_star * (1.0 + margin)):
            raise CharacteristicTraceError(f"characteristic from ({start[0]:.6g}, {start[1]:.6g}) leaves the "
                                           f"supersonic region q > c*(1 + {margin:g})")
        invariant = theta_at(points) + sign * H_at(points)
        drift = float(np.max(np.abs(invariant - invariant[0]))) if len(invariant) else 0.0
        paths.append({"start": [float(start[0]), float(start[1])], "family": family,
                      "samples": int(end), "drift": drift, "relative_drift": drift / scale})
    report = {"family": family, "paths": paths,
              "max_relative_drift": max((path["relative_drift"] for path in paths), default=0.0)}
    logger.info(f"Riemann invariant drift ({family}): max relative {report['max_relative_drift']:.3e}")
    return report


def _wall_x(solution, wall_x):
    if wall_x is not None:
        return wall_x
    if isinstance(solution, TransonicSolution) and solution.x is not None:
        phi, x = solution.phi, solution.x[:, -1]
        return lambda value: float(np.interp(value, phi, x))
    return None


def wall_curvature_check(spec, diagnostics, field=None, gas=None, wall_x=None):
    """
    Necessary condition on the upper wall: when S_+ is nonempty, f'' > 0 on [x_1, x*], x_1 the sonic
    point on the wall and x* the farthest wall endpoint of the negative characteristics issued from
    S_+. With S_+ empty the check is vacuous and reported as such. `wall_x` maps phi on the wall to x;
    it defaults to the physical coordinates of a mapped TransonicSolution.
    """
    plus = diagnostics.segment_points(SEGMENT_PLUS)
    if not plus:
        x = np.linspace(0.0, spec.l_plus, VALIDATION_SAMPLES)[1:]
        report = {"status": "vacuous", "S_plus_empty": True, "passed": True,
                  "downstream_curvature_positive": bool(np.all(np.asarray(spec.wall.d2(x)) > 0.0)),
                  "message": "S_+ is empty; no wall-curvature condition applies"}
        diagnostics.curvature_report = report
        return report
    to_x = _wall_x(field, wall_x)
    if field is None or gas is None or to_x is None:
        raise ValueError("a nonempty S_+ needs the field, the gas model and the wall phi -> x map")
    potential = _as_potential_field(field, gas)
    speed = _speed_interpolator(potential)
    top = float(potential.psi[-1])
    endpoints = []
    for point in plus:
        phi, _ = trace_in_psi(potential, gas, (point.phi, point.psi), -1.0, top, speed=speed)
        endpoints.append(float(phi[-1]))
    wall_point = max(plus, key=lambda point: point.psi)
    x_one = to_x(wall_point.phi)
    x_star = max(to_x(phi) for phi in endpoints)
    low, high = sorted((x_one, x_star))
    samples = np.linspace(low, high, VALIDATION_SAMPLES)[1:-1] if high > low else np.array([low])
    curvature = np.asarray(spec.wall.d2(samples))
    passed = bool(np.all(curvature > 0.0))
    report = {"status": "checked", "S_plus_empty": False, "passed": passed, "x_1": float(x_one),
              "x_star": float(x_star), "min_curvature": float(np.min(curvature)),
              "message": "f'' > 0 on [x_1, x*]" if passed else "f'' fails to be positive on [x_1, x*]"}
    diagnostics.curvature_report = report
    return report


def streamline_curvature_signs(phi, psi, theta, tolerance=1e-12):
    """
    Sign of theta_phi along each streamline psi = const: 'convex' (theta_phi >= 0), 'concave'
    (theta_phi <= 0), 'straight' or 'mixed'.
    """
    theta_phi = np.gradient(theta, phi, axis=0)
    scale = max(float(np.max(np.abs(theta_phi))), np.finfo(float).tiny)
    signs = []
    for column in theta_phi.T:
        positive = bool(np.any(column > tolerance * scale))
        negative = bool(np.any(column < -tolerance * scale))
        if positive and negative:
            signs.append("mixed")
        elif positive:
            signs.append("convex")
        elif negative:
            signs.append("concave")
        else:
            signs.append("straight")
    return {"psi": [float(value) for value in psi], "signs": signs}


def analyze(field, gas, tol=None, spec=None, drift_paths=0):
    """Runs the diagnostics that apply to `field` and collects them in one SonicDiagnostics."""
    diagnostics = classify_sonic_points(field, gas, tol=tol)
    if isinstance(field, TransonicSolution):
        theta = field.theta
        if theta is None:
            theta, _ = integrate_theta(field.phi, field.psi, field.q, gas, field.sonic_index)
        diagnostics.streamline_curvature = streamline_curvature_signs(field.phi, field.psi, theta)
        if drift_paths:
            starts = default_drift_starts(field.sup, drift_paths)
            diagnostics.invariant_drift = {name: riemann_invariant_drift(field, starts, name, gas)
                                           for name in (PLUS, MINUS)}
    elif isinstance(field, PotentialPlaneField):
        anchor = int(np.argmin(np.max(np.abs(field.q - gas.c_star), axis=1)))
        theta, _ = integrate_theta(field.phi, field.psi, field.q, gas, anchor)
        diagnostics.streamline_curvature = streamline_curvature_signs(field.phi, field.psi, theta)
    if spec is not None:
        wall_curvature_check(spec, diagnostics, field=field, gas=gas)
    return diagnostics
