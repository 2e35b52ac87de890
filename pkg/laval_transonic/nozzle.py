"""
Nozzle geometry: walls, inlet arc, admissibility validation, the throat mass flux, and the
nonlocal boundary maps between physical coordinates on the boundary and potential-plane coordinates.

The nozzle is symmetric about y = 0; only the upper half is represented. The wall y = f(x) runs from
the inlet x = l_minus < 0 through the throat x = 0 to the exit x = l_plus > 0. The inlet is the curve
x = g(y), 0 <= y <= f(l_minus).
"""

import logging

import numpy as np
from scipy import integrate
from scipy import interpolate

from . constants import (DELTA_DEFAULT,
                         F0_DEFAULT,
                         L_MINUS_DEFAULT,
                         L_PLUS_DEFAULT,
                         LAMBDA_DEFAULT,
                         LENGTH_HARD_CEILING,
                         LENGTH_SOFT_THRESHOLD,
                         MAP_INVERSE_POLISH_STEPS,
                         VALIDATION_SAMPLES,
                         VALIDATION_SLACK)
from . error_processing import (BoundaryMapError,
                                NozzleParameterError)

logger = logging.getLogger(__name__)

POWER_LAW = "power_law"
STRAIGHT_CHANNEL = "straight_channel"

# Severity levels of admissibility conditions
ERROR = "error"
WARNING = "warning"
INFO = "info"
NOT_APPLICABLE = "not_applicable"


def _as_array(values):
    array = np.asarray(values, dtype=float)
    return array, array.ndim == 0


def _restore(array, is_scalar):
    if is_scalar:
        return float(array)
    return array


def _side_power(magnitude, exponent):
    # |x|**exponent with the limit value at x = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.power(magnitude, exponent)
    if exponent > 0:
        return np.where(magnitude > 0.0, value, 0.0)
    if exponent == 0:
        return np.ones_like(magnitude)
    return np.where(magnitude > 0.0, value, np.inf)


class PowerLawWall:
    """
    Wall f(x) = f0 + delta |x|^(lambda+2) / ((lambda+1)(lambda+2)), with its own lambda and delta on
    each side of the throat, so that f''(x) = delta |x|^lambda exactly.
    """

    __slots__ = {
        "f0": "Throat half-height f(0)",
        "lambda_minus": "Curvature exponent upstream of the throat",
        "lambda_plus": "Curvature exponent downstream of the throat",
        "delta_minus": "Curvature amplitude upstream of the throat",
        "delta_plus": "Curvature amplitude downstream of the throat",
    }

    def __init__(self, *, f0, lambda_minus, lambda_plus, delta_minus, delta_plus):
        self.f0 = float(f0)
        self.lambda_minus = float(lambda_minus)
        self.lambda_plus = float(lambda_plus)
        self.delta_minus = float(delta_minus)
        self.delta_plus = float(delta_plus)

    def _sides(self, x):
        upstream = x < 0.0
        lam = np.where(upstream, self.lambda_minus, self.lambda_plus)
        delta = np.where(upstream, self.delta_minus, self.delta_plus)
        sign = np.where(upstream, -1.0, 1.0)
        return np.abs(x), lam, delta, sign

    def _evaluate(self, x, shift):
        # shift 0..3 selects f, f', f'', f'''; each side handled with its own exponent
        x, is_scalar = _as_array(x)
        magnitude, lam, delta, sign = self._sides(x)
        result = np.empty_like(x)
        for side_lambda in np.unique(lam):
            mask = lam == side_lambda
            power = _side_power(magnitude[mask], side_lambda + 2.0 - shift)
            if shift == 0:
                value = self.f0 + delta[mask] * power / ((side_lambda + 1.0) * (side_lambda + 2.0))
            elif shift == 1:
                value = sign[mask] * delta[mask] * power / (side_lambda + 1.0)
            elif shift == 2:
                value = delta[mask] * power
            else:
                value = sign[mask] * delta[mask] * side_lambda * power
            result[mask] = value
        return _restore(result, is_scalar)

    def f(self, x):
        return self._evaluate(x, 0)

    def d1(self, x):
        return self._evaluate(x, 1)

    def d2(self, x):
        return self._evaluate(x, 2)

    def d3(self, x):
        return self._evaluate(x, 3)


class CircularInlet:
    """
    Inlet arc x = g0(y) = x_c - sqrt(R0^2 - y^2): the circle of radius R0 that meets the wall
    orthogonally at (l_minus, f(l_minus)) and is centred on the axis.
    """

    __slots__ = {
        "x_center": "Abscissa of the circle's centre on the axis",
        "radius": "R0 = f(l_minus) sqrt(f'(l_minus)^2 + 1) / (-f'(l_minus))",
    }

    def __init__(self, *, x_center, radius):
        self.x_center = float(x_center)
        self.radius = float(radius)

    @classmethod
    def matching_wall(cls, wall, l_minus):
        height = wall.f(l_minus)
        slope = wall.d1(l_minus)
        if not slope < 0.0:
            raise NozzleParameterError("circular inlet needs a converging wall, f'(l_minus) < 0")
        radius = height * np.sqrt(slope * slope + 1.0) / (-slope)
        return cls(x_center=l_minus - height / slope, radius=radius)

    def _root(self, y):
        return np.sqrt(self.radius ** 2 - y * y)

    def g(self, y):
        y, is_scalar = _as_array(y)
        return _restore(self.x_center - self._root(y), is_scalar)

    def d1(self, y):
        y, is_scalar = _as_array(y)
        return _restore(y / self._root(y), is_scalar)

    def d2(self, y):
        y, is_scalar = _as_array(y)
        return _restore(self.radius ** 2 / self._root(y) ** 3, is_scalar)

    def d3(self, y):
        y, is_scalar = _as_array(y)
        return _restore(3.0 * self.radius ** 2 * y / self._root(y) ** 5, is_scalar)


class StraightInlet:
    """
    Vertical inlet x = l_minus, used with walls that have zero slope at the inlet.
    """

    __slots__ = {
        "x_position": "Abscissa of the inlet segment",
    }

    def __init__(self, *, x_position):
        self.x_position = float(x_position)

    @property
    def radius(self):
        return np.inf

    def g(self, y):
        y, is_scalar = _as_array(y)
        return _restore(np.full_like(y, self.x_position), is_scalar)

    def _zero(self, y):
        y, is_scalar = _as_array(y)
        return _restore(np.zeros_like(y), is_scalar)

    d1 = _zero
    d2 = _zero
    d3 = _zero


class NozzleSpec:
    """
    Wall and inlet geometry together with the curvature-envelope constants the solvers' theory is
    stated in.
    """

    __slots__ = {
        "kind": "'power_law' or 'straight_channel'",
        "l_minus": "Inlet abscissa, < 0",
        "l_plus": "Exit abscissa, > 0",
        "f0": "Throat half-height f(0), > 0",
        "lambda_minus": "Upstream curvature exponent",
        "lambda_plus": "Downstream curvature exponent",
        "delta1_minus": "Lower upstream envelope constant: delta1 (-x)^lambda <= f''",
        "delta2_minus": "Upper upstream envelope constant: f'' <= delta2 (-x)^lambda",
        "delta1_plus": "Lower downstream envelope constant",
        "delta2_plus": "Upper downstream envelope constant",
        "wall": "Object with f, d1, d2, d3",
        "inlet": "Object with g, d1, d2, d3",
    }

    def __init__(self, *, kind, l_minus, l_plus, f0, lambda_minus, lambda_plus,
                 delta1_minus, delta2_minus, delta1_plus, delta2_plus, wall, inlet):
        if not l_minus < 0.0 < l_plus:
            raise NozzleParameterError(f"need l_minus < 0 < l_plus, got {l_minus}, {l_plus}")
        if not f0 > 0.0:
            raise NozzleParameterError(f"throat half-height must be positive, got f0={f0}")
        self.kind = kind
        self.l_minus = float(l_minus)
        self.l_plus = float(l_plus)
        self.f0 = float(f0)
        self.lambda_minus = float(lambda_minus)
        self.lambda_plus = float(lambda_plus)
        self.delta1_minus = float(delta1_minus)
        self.delta2_minus = float(delta2_minus)
        self.delta1_plus = float(delta1_plus)
        self.delta2_plus = float(delta2_plus)
        self.wall = wall
        self.inlet = inlet

    def __repr__(self):
        return (f"NozzleSpec(kind={self.kind!r}, l_minus={self.l_minus}, l_plus={self.l_plus}, "
                f"f0={self.f0}, lambda=({self.lambda_minus}, {self.lambda_plus}))")

    @property
    def inlet_height(self):
        return float(self.wall.f(self.l_minus))

    @property
    def total_turning(self):
        """Angle through which the upstream wall turns the flow, -Theta_minus(l_minus) >= 0."""
        return float(-self.wall_angle(self.l_minus))

    def wall_height(self, x):
        return self.wall.f(x)

    def wall_angle(self, x):
        """Theta(x) = arctan f'(x)."""
        return np.arctan(self.wall.d1(x))

    def wall_curvature(self, x):
        """Theta'(x) cos Theta(x) = f''/(1 + f'^2)^(3/2)."""
        slope = np.asarray(self.wall.d1(x))
        value = np.asarray(self.wall.d2(x)) / (1.0 + slope * slope) ** 1.5
        return value if value.ndim else float(value)

    def inlet_angle(self, y):
        """Theta_in(y) = -arctan g'(y)."""
        return -np.arctan(self.inlet.d1(y))

    def inlet_curvature(self, y):
        """Theta_in'(y) cos Theta_in(y) = -g''/(1 + g'^2)^(3/2)."""
        slope = np.asarray(self.inlet.d1(y))
        value = -np.asarray(self.inlet.d2(y)) / (1.0 + slope * slope) ** 1.5
        return value if value.ndim else float(value)

    def inlet_curvature_derivative(self, y):
        """d/dy of g''/(1 + g'^2)^(3/2)."""
        slope = np.asarray(self.inlet.d1(y))
        second = np.asarray(self.inlet.d2(y))
        third = np.asarray(self.inlet.d3(y))
        base = 1.0 + slope * slope
        value = third / base ** 1.5 - 3.0 * second * second * slope / base ** 2.5
        return value if value.ndim else float(value)

    @property
    def inlet_radius(self):
        """R0 of the inlet compatibility window; infinite for a zero wall slope at the inlet."""
        slope = float(self.wall.d1(self.l_minus))
        if slope == 0.0:
            return np.inf
        return self.inlet_height * np.sqrt(slope * slope + 1.0) / (-slope)


def default_wall(l_minus=L_MINUS_DEFAULT, l_plus=L_PLUS_DEFAULT, f0=F0_DEFAULT,
                 lambda_minus=LAMBDA_DEFAULT, lambda_plus=LAMBDA_DEFAULT, delta=DELTA_DEFAULT):
    """
    Returns the canonical power-law nozzle with f''(x) = delta |x|^lambda on each side and the
    circular inlet arc.

    Exponents at or below 2 and delta = 0 are accepted here; `validate` reports them as failing the
    curvature envelope. With delta = 0 the wall is straight and the inlet becomes a vertical segment.
    """
    if delta < 0.0:
        raise NozzleParameterError(f"curvature amplitude must be nonnegative, got delta={delta}")
    if lambda_minus < 0.0 or lambda_plus < 0.0:
        raise NozzleParameterError("curvature exponents must be nonnegative")
    wall = PowerLawWall(f0=f0, lambda_minus=lambda_minus, lambda_plus=lambda_plus,
                        delta_minus=delta, delta_plus=delta)
    if delta > 0.0:
        inlet = CircularInlet.matching_wall(wall, l_minus)
    else:
        inlet = StraightInlet(x_position=l_minus)
    return NozzleSpec(kind=POWER_LAW, l_minus=l_minus, l_plus=l_plus, f0=f0,
                      lambda_minus=lambda_minus, lambda_plus=lambda_plus,
                      delta1_minus=delta, delta2_minus=delta, delta1_plus=delta, delta2_plus=delta,
                      wall=wall, inlet=inlet)


def straight_channel(l_minus=L_MINUS_DEFAULT, l_plus=L_PLUS_DEFAULT, f0=F0_DEFAULT):
    """
    Returns the parallel-wall fixture: every turning angle vanishes, so all Neumann data are zero.
    """
    wall = PowerLawWall(f0=f0, lambda_minus=LAMBDA_DEFAULT, lambda_plus=LAMBDA_DEFAULT,
                        delta_minus=0.0, delta_plus=0.0)
    return NozzleSpec(kind=STRAIGHT_CHANNEL, l_minus=l_minus, l_plus=l_plus, f0=f0,
                      lambda_minus=LAMBDA_DEFAULT, lambda_plus=LAMBDA_DEFAULT,
                      delta1_minus=0.0, delta2_minus=0.0, delta1_plus=0.0, delta2_plus=0.0,
                      wall=wall, inlet=StraightInlet(x_position=l_minus))


def mass_flux(spec, gas):
    """
    Throat mass flux m = f(0) c*^(1 + 2/(gamma-1)) = f(0) rho(c*^2) c*.
    """
    return spec.f0 * gas.critical_mass_flux_density


#   ADMISSIBILITY

class ConditionResult:
    """
    Outcome of one admissibility condition.
    """

    __slots__ = {
        "name": "Identifier of the condition",
        "passed": "True when the condition holds",
        "severity": "'error', 'warning', 'info' or 'not_applicable'",
        "worst_x": "Abscissa (or ordinate, for inlet conditions) of the worst sample; None if not sampled",
        "margin": "Smallest slack over the samples; negative when violated",
        "message": "Human-readable summary",
    }

    def __init__(self, *, name, passed, severity=ERROR, worst_x=None, margin=None, message=""):
        self.name = name
        self.passed = bool(passed)
        self.severity = severity
        self.worst_x = None if worst_x is None else float(worst_x)
        self.margin = None if margin is None else float(margin)
        self.message = message

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "severity": self.severity,
                "worst_x": self.worst_x, "margin": self.margin, "message": self.message}


class AdmissibilityReport:
    """
    Per-condition results of `validate`; `passed` considers only conditions of severity 'error'.
    """

    __slots__ = {
        "conditions": "List of ConditionResult in evaluation order",
    }

    def __init__(self, conditions):
        self.conditions = list(conditions)

    @property
    def passed(self):
        return all(condition.passed for condition in self.conditions if condition.severity == ERROR)

    def condition(self, name):
        for condition in self.conditions:
            if condition.name == name:
                return condition
        raise KeyError(name)

    def failed_conditions(self):
        return [c for c in self.conditions if c.severity == ERROR and not c.passed]

    def warnings(self):
        return [c for c in self.conditions if c.severity == WARNING and not c.passed]

    def as_dict(self):
        return {"passed": self.passed, "conditions": [c.as_dict() for c in self.conditions]}


def _envelope_condition(spec, name, side):
    if side == "minus":
        lam, low, high = spec.lambda_minus, spec.delta1_minus, spec.delta2_minus
        x = np.linspace(spec.l_minus, 0.0, VALIDATION_SAMPLES)
    else:
        lam, low, high = spec.lambda_plus, spec.delta1_plus, spec.delta2_plus
        x = np.linspace(0.0, spec.l_plus, VALIDATION_SAMPLES)
    if spec.kind == STRAIGHT_CHANNEL:
        return ConditionResult(name=name, passed=True, severity=NOT_APPLICABLE,
                               message="straight-channel fixture has no curvature envelope")
    if not lam > 2.0:
        return ConditionResult(name=name, passed=False, message=f"exponent lambda={lam} must exceed 2")
    if not (0.0 < low <= high):
        return ConditionResult(name=name, passed=False,
                               message=f"envelope constants must satisfy 0 < delta1 <= delta2, got {low}, {high}")
    curvature = np.asarray(spec.wall.d2(x))
    weight = np.abs(x) ** lam
    slack = VALIDATION_SLACK * np.maximum(high * weight, np.finfo(float).tiny)
    margin = np.minimum(curvature - low * weight, high * weight - curvature) + slack
    message = f"delta1 |x|^lambda <= f'' <= delta2 |x|^lambda with lambda={lam}"
    if side == "plus":
        third = np.asarray(spec.wall.d3(x))
        margin = np.minimum(margin, third + slack)
        message += " and f''' >= 0"
    worst = int(np.argmin(margin))
    return ConditionResult(name=name, passed=bool(margin[worst] >= 0.0), worst_x=x[worst],
                           margin=margin[worst], message=message)


def _inlet_compatibility(spec):
    height = spec.inlet_height
    slope = float(spec.wall.d1(spec.l_minus))
    residuals = {
        "g'(0)": abs(float(spec.inlet.d1(0.0))),
        "g(f(l_minus)) - l_minus": abs(float(spec.inlet.g(height)) - spec.l_minus),
        "g'(f(l_minus)) + f'(l_minus)": abs(float(spec.inlet.d1(height)) + slope),
    }
    scale = max(1.0, abs(spec.l_minus), height)
    worst_name = max(residuals, key=residuals.get)
    margin = 1e-10 * scale - residuals[worst_name]
    return ConditionResult(name="inlet_compatibility", passed=margin >= 0.0, margin=margin,
                           message=f"largest mismatch in {worst_name}")


def _inlet_curvature_window(spec):
    radius = spec.inlet_radius
    if not np.isfinite(radius):
        if spec.kind == STRAIGHT_CHANNEL:
            return ConditionResult(name="inlet_curvature_window", passed=True, severity=NOT_APPLICABLE,
                                   message="straight inlet of the straight-channel fixture")
        return ConditionResult(name="inlet_curvature_window", passed=False,
                               message="inlet window undefined: wall slope vanishes at the inlet")
    y = np.linspace(0.0, spec.inlet_height, VALIDATION_SAMPLES)
    curvature = -np.asarray(spec.inlet_curvature(y))
    lower, upper = 0.5 / radius, 1.5 / radius
    margin = np.minimum(curvature - lower, upper - curvature) * radius
    bound = abs(spec.l_minus) * (-spec.l_minus) ** (1.5 * spec.lambda_minus)
    derivative_margin = (bound - np.abs(np.asarray(spec.inlet_curvature_derivative(y)))) / max(bound, 1e-300)
    combined = np.minimum(margin, derivative_margin)
    worst = int(np.argmin(combined))
    return ConditionResult(name="inlet_curvature_window", passed=bool(combined[worst] >= -VALIDATION_SLACK),
                           worst_x=y[worst], margin=combined[worst],
                           message="(g'/sqrt(g'^2+1))' within [1/(2 R0), 3/(2 R0)] with small derivative")


def _third_derivative_bound(spec, side):
    if spec.kind == STRAIGHT_CHANNEL:
        return ConditionResult(name=f"third_derivative_bound_{side}", passed=True, severity=NOT_APPLICABLE)
    if side == "plus":
        x = np.linspace(0.0, spec.l_plus, VALIDATION_SAMPLES)[1:]
        exponent = spec.lambda_plus - 1.0
        message = "|f'''| <= delta3 x^(lambda-1) downstream"
    else:
        x = np.linspace(spec.l_minus, 0.0, VALIDATION_SAMPLES)[:-1]
        exponent = spec.lambda_minus / 4.0 + 0.5
        message = "|f'''| <= delta3 (-x)^(lambda/4+1/2) upstream"
    ratio = np.abs(np.asarray(spec.wall.d3(x))) / np.abs(x) ** exponent
    worst = int(np.argmax(ratio))
    delta3 = float(ratio[worst])
    return ConditionResult(name=f"third_derivative_bound_{side}", passed=bool(np.isfinite(delta3)),
                           severity=INFO, worst_x=x[worst], margin=delta3,
                           message=f"{message}; smallest admissible delta3 = {delta3:.6g}")


def _length_condition(length, name):
    size = abs(length)
    if size > LENGTH_HARD_CEILING:
        return ConditionResult(name=name, passed=False, severity=WARNING, margin=LENGTH_SOFT_THRESHOLD - size,
                               message=f"|l|={size} exceeds {LENGTH_HARD_CEILING}; outside the small-nozzle theory")
    if size > LENGTH_SOFT_THRESHOLD:
        return ConditionResult(name=name, passed=False, severity=WARNING, margin=LENGTH_SOFT_THRESHOLD - size,
                               message=f"|l|={size} exceeds the soft threshold {LENGTH_SOFT_THRESHOLD}; "
                                       "the fixed points may diverge")
    return ConditionResult(name=name, passed=True, severity=WARNING, margin=LENGTH_SOFT_THRESHOLD - size)


def validate(spec):
    """
    Checks the curvature envelopes on both sides of the throat, the inlet compatibility and curvature
    window, reports the third-derivative bounds, and warns about long nozzles.

    Never raises: every outcome is part of the returned AdmissibilityReport.
    """
    conditions = [
        _envelope_condition(spec, "upstream_curvature_envelope", "minus"),
        _envelope_condition(spec, "downstream_curvature_envelope", "plus"),
        _inlet_compatibility(spec),
        _inlet_curvature_window(spec),
        _third_derivative_bound(spec, "plus"),
        _third_derivative_bound(spec, "minus"),
        _length_condition(spec.l_minus, "upstream_length"),
        _length_condition(spec.l_plus, "downstream_length"),
    ]
    report = AdmissibilityReport(conditions)
    for condition in report.failed_conditions():
        logger.info(f"admissibility condition {condition.name} failed: {condition.message}")
    return report


#   BOUNDARY MAPS

class _MonotoneMap:
    """
    Strictly increasing sampled map with its inverse.

    The forward map is a monotone cubic (PCHIP) interpolant of the samples; the inverse starts from
    the PCHIP interpolant of the swapped samples and is polished by Newton steps on the forward map,
    so that inverse(forward(x)) = x to rounding.
    """

    __slots__ = {
        "abscissae": "Increasing sample abscissae",
        "values": "Increasing sample values",
        "_forward": "PCHIP interpolant abscissa -> value",
        "_forward_slope": "Derivative of the forward interpolant",
        "_backward": "PCHIP interpolant value -> abscissa",
    }

    def __init__(self, abscissae, values, name):
        abscissae = np.asarray(abscissae, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(np.diff(abscissae) <= 0.0):
            raise BoundaryMapError(f"{name}: sample abscissae are not strictly increasing")
        if np.any(np.diff(values) <= 0.0) or not np.all(np.isfinite(values)):
            worst = int(np.argmin(np.diff(values)))
            raise BoundaryMapError(f"{name}: cumulative integral not strictly monotone near "
                                   f"{abscissae[worst]:.6g}; the speed samples are corrupted")
        self.abscissae = abscissae
        self.values = values
        self._forward = interpolate.PchipInterpolator(abscissae, values, extrapolate=True)
        self._forward_slope = self._forward.derivative()
        self._backward = interpolate.PchipInterpolator(values, abscissae, extrapolate=True)

    def forward(self, x):
        x, is_scalar = _as_array(x)
        x = np.clip(x, self.abscissae[0], self.abscissae[-1])
        return _restore(self._forward(x), is_scalar)

    def inverse(self, value):
        value, is_scalar = _as_array(value)
        value = np.clip(value, self.values[0], self.values[-1])
        x = self._backward(value)
        for _ in range(MAP_INVERSE_POLISH_STEPS):
            slope = self._forward_slope(x)
            step = np.where(slope > 0.0, (self._forward(x) - value) / np.where(slope > 0.0, slope, 1.0), 0.0)
            x = np.clip(x - step, self.abscissae[0], self.abscissae[-1])
        return _restore(x, is_scalar)


class BoundaryMaps:
    """
    The nonlocal maps between boundary coordinates and the potential plane for given boundary speeds:

        Phi_minus: [l_minus, 0] -> [zeta_minus, 0],    Phi_plus: [0, l_plus] -> [0, zeta_plus],
        Psi_in:    [0, f(l_minus)] -> [0, m_in],

    their inverses X_minus, X_plus, Y_in, and the flow-angle data carried along them.
    Sides whose speed samples were not supplied are None.
    """

    __slots__ = {
        "spec": "NozzleSpec the maps belong to",
        "gas": "GasModel",
        "m": "Throat mass flux",
        "m_in": "Inlet mass flux Psi_in(f(l_minus)); None without inlet samples",
        "zeta_minus": "Phi_minus(l_minus) < 0; None without upstream wall samples",
        "zeta_plus": "Phi_plus(l_plus) > 0; None without downstream wall samples",
        "_inlet": "_MonotoneMap y -> psi",
        "_minus": "_MonotoneMap x -> phi upstream",
        "_plus": "_MonotoneMap x -> phi downstream",
        "_q_inlet": "PCHIP interpolant of the inlet speed samples",
        "_q_minus": "PCHIP interpolant of the upstream wall speed samples",
        "_q_plus": "PCHIP interpolant of the downstream wall speed samples",
    }

    def __init__(self, *, spec, gas, m, inlet=None, minus=None, plus=None,
                 q_inlet=None, q_minus=None, q_plus=None):
        self.spec = spec
        self.gas = gas
        self.m = m
        self._inlet = inlet
        self._minus = minus
        self._plus = plus
        self._q_inlet = q_inlet
        self._q_minus = q_minus
        self._q_plus = q_plus
        self.m_in = float(inlet.values[-1]) if inlet is not None else None
        self.zeta_minus = float(minus.values[0]) if minus is not None else None
        self.zeta_plus = float(plus.values[-1]) if plus is not None else None

    def _require(self, side, name):
        if side is None:
            raise BoundaryMapError(f"{name} requested but its speed samples were not supplied")
        return side

    def Phi_minus(self, x):
        return self._require(self._minus, "Phi_minus").forward(x)

    def X_minus(self, phi):
        return self._require(self._minus, "X_minus").inverse(phi)

    def Phi_plus(self, x):
        return self._require(self._plus, "Phi_plus").forward(x)

    def X_plus(self, phi):
        return self._require(self._plus, "X_plus").inverse(phi)

    def Psi_in(self, y):
        return self._require(self._inlet, "Psi_in").forward(y)

    def Y_in(self, psi):
        return self._require(self._inlet, "Y_in").inverse(psi)

    def Theta_in(self, y):
        return self.spec.inlet_angle(y)

    def Theta_minus(self, x):
        return self.spec.wall_angle(x)

    def Theta_plus(self, x):
        return self.spec.wall_angle(x)

    def q_inlet(self, y):
        return self._require(self._q_inlet, "inlet speed")(y)

    def q_wall_minus(self, x):
        return self._require(self._q_minus, "upstream wall speed")(x)

    def q_wall_plus(self, x):
        return self._require(self._q_plus, "downstream wall speed")(x)

    def inlet_turning(self, psi):
        """Theta_in(Y_in(psi)); its psi-derivative is minus the inlet Neumann datum."""
        return self.Theta_in(self.Y_in(psi))

    def wall_turning_minus(self, phi):
        """Theta_minus(X_minus(phi)); its phi-derivative is the upstream wall Neumann datum."""
        return self.Theta_minus(self.X_minus(phi))

    def wall_curvature_plus(self, phi):
        """Theta_plus' cos Theta_plus at x = X_plus(phi)."""
        return np.asarray(self.spec.wall_curvature(self.X_plus(phi)))


def _speed_samples(samples, name):
    if samples is None:
        return None, None
    abscissae, speeds = samples
    abscissae = np.asarray(abscissae, dtype=float)
    speeds = np.asarray(speeds, dtype=float)
    if abscissae.shape != speeds.shape or abscissae.ndim != 1 or abscissae.size < 2:
        raise BoundaryMapError(f"{name}: need matching 1-D abscissa and speed arrays")
    return abscissae, speeds


def build_maps(spec, gas, q_in=None, q_wall_minus=None, q_wall_plus=None):
    """
    Builds BoundaryMaps from sampled boundary speeds.

    Each of q_in, q_wall_minus, q_wall_plus is a pair (abscissae, speeds): inlet ordinates on
    [0, f(l_minus)], upstream wall abscissae on [l_minus, 0], downstream wall abscissae on [0, l_plus].
    The derivatives

        Psi_in' = q rho(q^2) / cos Theta_in,      Phi' = q / cos Theta

    are integrated by the composite trapezoid rule on the sample abscissae.
    """
    slack = 1e-12
    m = mass_flux(spec, gas)
    inlet = minus = plus = None
    q_inlet = q_minus = q_plus = None

    y, speeds = _speed_samples(q_in, "inlet speed")
    if y is not None:
        if np.any(speeds <= 0.0) or np.any(speeds > gas.c_star * (1.0 + slack)):
            raise BoundaryMapError("inlet speed samples must lie in (0, c*]")
        slope = np.asarray(spec.inlet.d1(y))
        integrand = speeds * gas.density(speeds * speeds) * np.sqrt(1.0 + slope * slope)
        inlet = _MonotoneMap(y, integrate.cumulative_trapezoid(integrand, y, initial=0.0), "Psi_in")
        q_inlet = interpolate.PchipInterpolator(y, speeds)

    x, speeds = _speed_samples(q_wall_minus, "upstream wall speed")
    if x is not None:
        if np.any(speeds <= 0.0) or np.any(speeds > gas.c_star * (1.0 + slack)):
            raise BoundaryMapError("upstream wall speed samples must lie in (0, c*]")
        slope = np.asarray(spec.wall.d1(x))
        cumulative = integrate.cumulative_trapezoid(speeds * np.sqrt(1.0 + slope * slope), x, initial=0.0)
        minus = _MonotoneMap(x, cumulative - cumulative[-1], "Phi_minus")
        q_minus = interpolate.PchipInterpolator(x, speeds)

    x, speeds = _speed_samples(q_wall_plus, "downstream wall speed")
    if x is not None:
        if np.any(speeds < gas.c_star * (1.0 - slack)) or np.any(speeds >= gas.q_max):
            raise BoundaryMapError("downstream wall speed samples must lie in [c*, q_max)")
        slope = np.asarray(spec.wall.d1(x))
        cumulative = integrate.cumulative_trapezoid(speeds * np.sqrt(1.0 + slope * slope), x, initial=0.0)
        plus = _MonotoneMap(x, cumulative, "Phi_plus")
        q_plus = interpolate.PchipInterpolator(x, speeds)

    maps = BoundaryMaps(spec=spec, gas=gas, m=m, inlet=inlet, minus=minus, plus=plus,
                        q_inlet=q_inlet, q_minus=q_minus, q_plus=q_plus)
    logger.debug(f"boundary maps: m={m:.12g}, m_in={maps.m_in}, zeta-={maps.zeta_minus}, zeta+={maps.zeta_plus}")
    return maps
