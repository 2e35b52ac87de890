"""
The isentropic-gas closure: density, the Chaplygin functions A and B with their derivatives and
inverses, and the derived functions E, G (subsonic side), K, b, p (supersonic side) and H.

All functions are pure and vectorized: they accept a scalar or a numpy array and return the same
shape (a Python float for scalar input).

A and B vanish at the critical speed c*, A quadratically and B linearly. Both are therefore
represented through their sonic-regular factors

    R(q) = A(q) / (q - c*)**2,      S(q) = B(q) / (q - c*),

which are analytic and bounded away from zero on (0, q_max). Each factor is an adaptive quadrature
of a closed-form integrand over [0, 1], memoized on a piecewise Chebyshev interpolant. Working with
the offset q - c* keeps full relative precision as q approaches c*, which matters for b(Q) when the
supersonic field Q tends to 0 at the sonic line.
"""

import functools
import logging

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate

from . constants import (CHEBYSHEV_DEGREE,
                         CHEBYSHEV_SUBSONIC_BREAKS,
                         CHEBYSHEV_SUPERSONIC_BREAKS,
                         GAMMA_DEFAULT,
                         Q_MAX_GUARD,
                         QUAD_TOLERANCE,
                         ROOT_MAX_ITERATIONS,
                         ROOT_TOLERANCE)
from . error_processing import GasDomainError

logger = logging.getLogger(__name__)

SUBSONIC = "subsonic"
SUPERSONIC = "supersonic"
BRANCHES = (SUBSONIC, SUPERSONIC)

# Lower end of the speed bracket used by the inverse functions, as a fraction of c*
_LOWEST_SPEED_FRACTION = 1e-8
# Upper end of that bracket sits this fraction of q_max - c* below q_max
_BRACKET_GAP_FRACTION = 1e-6

# Below this value of sqrt(M^2 - 1) the closed form of H loses digits to cancellation
_H_SERIES_THRESHOLD = 1e-3


def _as_array(values):
    array = np.asarray(values, dtype=float)
    return array, array.ndim == 0


def _restore(array, is_scalar):
    if is_scalar:
        return float(array)
    return array


class _PiecewiseChebyshev:
    """
    Chebyshev interpolants of a function on consecutive intervals between breakpoints.
    """

    __slots__ = {
        "breaks": "Sorted breakpoints; piece k lives on [breaks[k], breaks[k+1]]",
        "pieces": "numpy Chebyshev series, one per piece",
        "derivatives": "First derivatives of the pieces",
    }

    def __init__(self, func, breaks, degree):
        self.breaks = np.asarray(breaks, dtype=float)
        self.pieces = [chebyshev.Chebyshev.interpolate(func, degree, domain=[lo, hi])
                       for lo, hi in zip(self.breaks[:-1], self.breaks[1:])]
        self.derivatives = [piece.deriv() for piece in self.pieces]

    def covers(self, x):
        return (x >= self.breaks[0]) & (x <= self.breaks[-1])

    def _evaluate(self, series, x):
        index = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(series) - 1)
        result = np.empty_like(x)
        for k, piece in enumerate(series):
            mask = index == k
            if np.any(mask):
                result[mask] = piece(x[mask])
        return result

    def __call__(self, x):
        return self._evaluate(self.pieces, x)

    def deriv(self, x):
        return self._evaluate(self.derivatives, x)


class GasModel:
    """
    Polytropic gas with adiabatic exponent gamma, nondimensionalized so that the stagnation sound
    speed and density are 1.

    An instance is immutable after construction and may be shared freely; use `gas_model(gamma)`
    to obtain a cached instance.
    """

    __slots__ = {
        "gamma":
            "Adiabatic exponent, > 1",
        "c_star":
            "Critical speed sqrt(2/(gamma+1)), where the flow speed equals the sound speed",
        "q_max":
            "Cavitation speed sqrt(2/(gamma-1)), where the density vanishes",
        "rho_star":
            "Critical density rho(c_star**2)",
        "_n":
            "Density exponent 1/(gamma-1)",
        "_q_low":
            "Lowest speed admitted by the inverse functions",
        "_q_high":
            "Highest speed admitted by any function (q_max minus the guard)",
        "_q_bracket_high":
            "Highest speed the inverse functions search",
        "_range_limits":
            "Branch-function values at the bracket ends: (F_low, F_high, B_low, B_high)",
        "_R_memo":
            "Piecewise Chebyshev memo of R(q) = A(q)/(q-c*)**2",
        "_S_memo":
            "Piecewise Chebyshev memo of S(q) = B(q)/(q-c*)",
        "_R_star":
            "R(c*) = A''(c*)/2",
        "_S_star":
            "S(c*) = B'(c*)",
    }

    def __init__(self, gamma=GAMMA_DEFAULT):
        gamma = float(gamma)
        if not gamma > 1.0:
            raise GasDomainError(f"adiabatic exponent must exceed 1, got gamma={gamma}")
        self.gamma = gamma
        self._n = 1.0 / (gamma - 1.0)
        self.c_star = float(np.sqrt(2.0 / (gamma + 1.0)))
        self.q_max = float(np.sqrt(2.0 / (gamma - 1.0)))
        self.rho_star = float(self._temperature(self.c_star ** 2) ** self._n)
        self._q_low = _LOWEST_SPEED_FRACTION * self.c_star
        self._q_high = self.q_max - Q_MAX_GUARD

        self._R_star = 0.5 * float(self._a_regular(np.array(self.c_star)))
        self._S_star = float(self._B_prime_raw(np.array(self.c_star)))

        span = self.q_max - self.c_star
        breaks = ([fraction * self.c_star for fraction in CHEBYSHEV_SUBSONIC_BREAKS]
                  + [self.c_star + fraction * span for fraction in CHEBYSHEV_SUPERSONIC_BREAKS[1:]])
        self._R_memo = _PiecewiseChebyshev(np.vectorize(self._R_quad, otypes=[float]), breaks, CHEBYSHEV_DEGREE)
        self._S_memo = _PiecewiseChebyshev(np.vectorize(self._S_quad, otypes=[float]), breaks, CHEBYSHEV_DEGREE)
        self._q_bracket_high = self.q_max - _BRACKET_GAP_FRACTION * span
        low = np.array(self._q_low - self.c_star)
        high = np.array(self._q_bracket_high - self.c_star)
        self._range_limits = (float(self._A_branch_function(low)), float(self._A_branch_function(high)),
                              float(self._B_offset_function(low)), float(self._B_offset_function(high)))
        logger.debug(f"GasModel(gamma={gamma}) built, c*={self.c_star:.15g}, q_max={self.q_max:.15g}")

    def __repr__(self):
        return f"GasModel(gamma={self.gamma!r})"

    # Closed-form building blocks

    def _temperature(self, q_squared):
        return 1.0 - 0.5 * (self.gamma - 1.0) * q_squared

    def _check_speed(self, q, lower=0.0, name="q"):
        if np.any(~np.isfinite(q)) or np.any(q <= lower) or np.any(q >= self._q_high):
            raise GasDomainError(
                f"{name} outside ({lower:.6g}, q_max={self.q_max:.6g}) with guard {Q_MAX_GUARD}")

    def _a_regular(self, s):
        # A'(s)/(s - c*), free of the cancellation at c*
        return -0.5 * (self.gamma + 1.0) * (s + self.c_star) / (s * self._temperature(s * s) ** (self._n + 1.0))

    def _B_prime_raw(self, s):
        return self._temperature(s * s) ** self._n / s

    def _R_quad(self, q):
        offset = q - self.c_star
        value, _ = integrate.quad(lambda t: t * self._a_regular(self.c_star + offset * t), 0.0, 1.0,
                                  epsabs=QUAD_TOLERANCE * 1e-2, epsrel=QUAD_TOLERANCE, limit=200)
        return value

    def _S_quad(self, q):
        offset = q - self.c_star
        value, _ = integrate.quad(lambda t: self._B_prime_raw(self.c_star + offset * t), 0.0, 1.0,
                                  epsabs=QUAD_TOLERANCE * 1e-2, epsrel=QUAD_TOLERANCE, limit=200)
        return value

    def _R(self, q):
        inside = self._R_memo.covers(q)
        if np.all(inside):
            return self._R_memo(q)
        result = np.empty_like(q)
        result[inside] = self._R_memo(q[inside])
        result[~inside] = np.vectorize(self._R_quad, otypes=[float])(q[~inside])
        return result

    def _R_prime(self, q):
        inside = self._R_memo.covers(q)
        if np.all(inside):
            return self._R_memo.deriv(q)
        result = np.empty_like(q)
        result[inside] = self._R_memo.deriv(q[inside])
        outside = q[~inside]
        offset = outside - self.c_star
        result[~inside] = (self._A_prime_raw(outside) - 2.0 * offset * self._R(outside)) / offset ** 2
        return result

    def _S(self, q):
        inside = self._S_memo.covers(q)
        if np.all(inside):
            return self._S_memo(q)
        result = np.empty_like(q)
        result[inside] = self._S_memo(q[inside])
        result[~inside] = np.vectorize(self._S_quad, otypes=[float])(q[~inside])
        return result

    def _S_prime(self, q):
        inside = self._S_memo.covers(q)
        if np.all(inside):
            return self._S_memo.deriv(q)
        result = np.empty_like(q)
        result[inside] = self._S_memo.deriv(q[inside])
        outside = q[~inside]
        offset = outside - self.c_star
        result[~inside] = (self._B_prime_raw(outside) - self._S(outside)) / offset
        return result

    def _A_prime_raw(self, q):
        return self._a_regular(q) * (q - self.c_star)

    def _subsonic_factor(self, offset):
        # T - q^2 = -(gamma+1)/2 * offset * (2 c* + offset), exact near the sonic state
        return -0.5 * (self.gamma + 1.0) * offset * (2.0 * self.c_star + offset)

    # State functions

    @property
    def critical_density(self):
        return self.rho_star

    @property
    def critical_mass_flux_density(self):
        """rho(c*^2) * c*, the mass flux per unit throat height."""
        return self.rho_star * self.c_star

    def density(self, q_squared):
        """
        Returns rho(q^2) = (1 - (gamma-1)/2 q^2)^(1/(gamma-1)) for 0 <= q^2 < q_max^2.
        """
        q_squared, is_scalar = _as_array(q_squared)
        if np.any(q_squared < 0.0) or np.any(q_squared >= self._q_high ** 2):
            raise GasDomainError(f"q^2 outside [0, q_max^2={self.q_max ** 2:.6g})")
        return _restore(self._temperature(q_squared) ** self._n, is_scalar)

    def sound_speed_squared(self, q_squared):
        q_squared, is_scalar = _as_array(q_squared)
        if np.any(q_squared < 0.0) or np.any(q_squared >= self._q_high ** 2):
            raise GasDomainError(f"q^2 outside [0, q_max^2={self.q_max ** 2:.6g})")
        return _restore(self._temperature(q_squared), is_scalar)

    def mach_number_squared(self, q):
        q, is_scalar = _as_array(q)
        self._check_speed(q, lower=-np.inf)
        return _restore(q * q / self._temperature(q * q), is_scalar)

    # Chaplygin functions

    def A(self, q):
        """
        A(q) = integral from c* to q of (rho + 2 s^2 rho')/(s rho^2) ds.

        Increasing on (0, c*], decreasing on [c*, q_max), with A(c*) = 0.
        """
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        offset = q - self.c_star
        return _restore(offset * offset * self._R(q), is_scalar)

    def A_prime(self, q):
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        return _restore(self._A_prime_raw(q), is_scalar)

    def A_second(self, q):
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        gamma = self.gamma
        temperature = self._temperature(q * q)
        numerator = self._subsonic_factor(q - self.c_star)
        value = ((-(gamma + 1.0) * q * q * temperature - numerator * (temperature - gamma * q * q))
                 / (q * q * temperature ** (self._n + 2.0)))
        return _restore(value, is_scalar)

    def B(self, q):
        """
        B(q) = integral from c* to q of rho(s^2)/s ds; strictly increasing, B(c*) = 0.
        """
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        return _restore((q - self.c_star) * self._S(q), is_scalar)

    def B_prime(self, q):
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        return _restore(self._B_prime_raw(q), is_scalar)

    def B_second(self, q):
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        temperature = self._temperature(q * q)
        return _restore(-temperature ** self._n / (q * q) - temperature ** (self._n - 1.0), is_scalar)

    # Inverses

    def _monotone_solve(self, func, dfunc, target, lo, hi, start):
        """
        Bracketed Newton iteration with bisection fallback for an increasing function.

        All arguments are arrays of one shape; the bracket [lo, hi] must contain the root.
        """
        x = np.clip(start, lo, hi)
        lo = lo.copy()
        hi = hi.copy()
        scale = np.maximum(1.0, np.abs(target))
        for _ in range(ROOT_MAX_ITERATIONS):
            residual = func(x) - target
            done = np.abs(residual) <= ROOT_TOLERANCE * scale
            if np.all(done):
                break
            hi = np.where(residual > 0.0, x, hi)
            lo = np.where(residual < 0.0, x, lo)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - residual / dfunc(x)
            bisect = ~np.isfinite(newton) | (newton <= lo) | (newton >= hi)
            candidate = np.where(bisect, 0.5 * (lo + hi), newton)
            x = np.where(done, x, candidate)
            if np.all(done | (hi - lo <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)))):
                break
        return x

    def _A_branch_function(self, offset):
        # F(offset) = offset * sqrt(-R); A = -F^2 and F is increasing through the sonic state
        return offset * np.sqrt(-self._R(self.c_star + offset))

    def _A_branch_derivative(self, offset):
        q = self.c_star + offset
        minus_R = -self._R(q)
        return np.sqrt(minus_R) - offset * self._R_prime(q) / (2.0 * np.sqrt(minus_R))

    def A_inv_offset(self, s, branch):
        """
        Returns q - c* for the speed q on `branch` with A(q) = s, s <= 0.

        The offset is exact to relative precision even when q is within rounding of c*.
        """
        if branch not in BRANCHES:
            raise GasDomainError(f"branch must be one of {BRANCHES}, got {branch!r}")
        s, is_scalar = _as_array(s)
        if np.any(~np.isfinite(s)) or np.any(s > 0.0):
            raise GasDomainError("A_inv requires s <= 0 = A(c*)")
        if branch == SUBSONIC:
            lo = np.full(s.shape, self._q_low - self.c_star)
            hi = np.zeros(s.shape)
            target = -np.sqrt(-s)
        else:
            lo = np.zeros(s.shape)
            hi = np.full(s.shape, self._q_bracket_high - self.c_star)
            target = np.sqrt(-s)
        limit = self._range_limits[0] if branch == SUBSONIC else self._range_limits[1]
        if np.any(np.abs(target) > abs(limit)):
            raise GasDomainError(f"A_inv: value below the range of the {branch} branch")
        start = target / np.sqrt(-self._R_star)
        offset = self._monotone_solve(self._A_branch_function, self._A_branch_derivative,
                                      target, lo, hi, start)
        offset = np.where(s == 0.0, 0.0, offset)
        return _restore(offset, is_scalar)

    def A_inv(self, s, branch):
        """
        Inverse of A on the subsonic branch (0, c*] or the supersonic branch [c*, q_max).
        """
        offset = self.A_inv_offset(s, branch)
        return self.c_star + offset

    def _B_offset_function(self, offset):
        return offset * self._S(self.c_star + offset)

    def _B_offset_derivative(self, offset):
        q = self.c_star + offset
        return self._S(q) + offset * self._S_prime(q)

    def B_inv_offset(self, s):
        """
        Returns q - c* for the speed with B(q) = s.
        """
        s, is_scalar = _as_array(s)
        lo = np.full(s.shape, self._q_low - self.c_star)
        hi = np.full(s.shape, self._q_bracket_high - self.c_star)
        if (np.any(~np.isfinite(s)) or np.any(s < self._range_limits[2])
                or np.any(s > self._range_limits[3])):
            raise GasDomainError("B_inv: value outside the range of B")
        start = s / self._S_star
        offset = self._monotone_solve(self._B_offset_function, self._B_offset_derivative, s, lo, hi, start)
        offset = np.where(s == 0.0, 0.0, offset)
        return _restore(offset, is_scalar)

    def B_inv(self, s):
        return self.c_star + self.B_inv_offset(s)

    # Subsonic functions E(s) = A(B^-1(s)) and G(s) = E'(E^-1(s))

    def _check_negative(self, s, name):
        s, is_scalar = _as_array(s)
        if np.any(~np.isfinite(s)) or np.any(s >= 0.0):
            raise GasDomainError(f"{name} requires s < 0")
        return s, is_scalar

    def E_upto_sonic(self, s):
        """
        E(s) = A(B^-1(s)) on s <= 0, including the sonic value E(0) = 0.
        """
        s, is_scalar = _as_array(s)
        offset = self.B_inv_offset(s)
        return _restore(offset * offset * self._R(self.c_star + offset), is_scalar)

    def E_prime_upto_sonic(self, s):
        s, is_scalar = _as_array(s)
        offset = self.B_inv_offset(s)
        q = self.c_star + offset
        value = self._subsonic_factor(offset) * self._temperature(q * q) ** (-2.0 * self._n - 1.0)
        return _restore(value, is_scalar)

    def E(self, s):
        s, is_scalar = self._check_negative(s, "E")
        return _restore(self.E_upto_sonic(s), is_scalar)

    def E_prime(self, s):
        """E'(s) = (1 - (gamma+1)/2 q^2) T^(-2/(gamma-1)-1) at q = B^-1(s); positive."""
        s, is_scalar = self._check_negative(s, "E'")
        return _restore(self.E_prime_upto_sonic(s), is_scalar)

    def E_second(self, s):
        """E''(s) = -(gamma+1) q^4 T^(-3/(gamma-1)-2) at q = B^-1(s); negative."""
        s, is_scalar = self._check_negative(s, "E''")
        q = self.B_inv(s)
        value = -(self.gamma + 1.0) * q ** 4 * self._temperature(q * q) ** (-3.0 * self._n - 2.0)
        return _restore(value, is_scalar)

    def E_third(self, s):
        s, is_scalar = self._check_negative(s, "E'''")
        q = self.B_inv(s)
        value = (-(self.gamma + 1.0) * q ** 4 * (4.0 + 3.0 * q * q)
                 * self._temperature(q * q) ** (-4.0 * self._n - 3.0))
        return _restore(value, is_scalar)

    def E_inv(self, t):
        t, is_scalar = self._check_negative(t, "E_inv")
        return _restore(self.B(self.A_inv(t, SUBSONIC)), is_scalar)

    def G(self, s):
        """G(s) = E'(E^-1(s)), the degenerate diffusion coefficient as a function of A."""
        s, is_scalar = self._check_negative(s, "G")
        offset = self.A_inv_offset(s, SUBSONIC)
        q = self.c_star + offset
        value = self._subsonic_factor(offset) * self._temperature(q * q) ** (-2.0 * self._n - 1.0)
        return _restore(value, is_scalar)

    def G_prime(self, s):
        """G'(s) = E''(t)/E'(t) at t = E^-1(s); negative."""
        s, is_scalar = self._check_negative(s, "G'")
        offset = self.A_inv_offset(s, SUBSONIC)
        q = self.c_star + offset
        value = (-(self.gamma + 1.0) * q ** 4 * self._temperature(q * q) ** (-self._n - 1.0)
                 / self._subsonic_factor(offset))
        return _restore(value, is_scalar)

    # Supersonic functions K(s) = B(A_+^-1(s)), b = -K', p = -K''

    def K(self, s):
        s, is_scalar = self._check_negative(s, "K")
        offset = self.A_inv_offset(s, SUPERSONIC)
        return _restore(offset * self._S(self.c_star + offset), is_scalar)

    def K_prime(self, s):
        s, is_scalar = self._check_negative(s, "K'")
        offset = self.A_inv_offset(s, SUPERSONIC)
        return _restore(-self._b_from_offset(offset), is_scalar)

    def K_second(self, s):
        s, is_scalar = self._check_negative(s, "K''")
        offset = self.A_inv_offset(s, SUPERSONIC)
        return _restore(-self._p_from_offset(offset), is_scalar)

    def _b_from_offset(self, offset):
        q = self.c_star + offset
        return self._temperature(q * q) ** (2.0 * self._n + 1.0) / (-self._subsonic_factor(offset))

    def _p_from_offset(self, offset):
        q = self.c_star + offset
        return ((self.gamma + 1.0) * q ** 4 * self._temperature(q * q) ** (3.0 * self._n + 1.0)
                / (-self._subsonic_factor(offset)) ** 3)

    def b(self, s):
        """b(s) = -K'(s) > 0; blows up like |s|^(-1/2) as s -> 0-."""
        s, is_scalar = self._check_negative(s, "b")
        return _restore(self._b_from_offset(self.A_inv_offset(s, SUPERSONIC)), is_scalar)

    def p(self, s):
        """p(s) = -K''(s) > 0."""
        s, is_scalar = self._check_negative(s, "p")
        return _restore(self._p_from_offset(self.A_inv_offset(s, SUPERSONIC)), is_scalar)

    def b_and_p(self, s):
        """
        b and p evaluated together from one inversion; s < 0, array input.
        """
        s, _ = self._check_negative(s, "b")
        offset = self.A_inv_offset(s, SUPERSONIC)
        return self._b_from_offset(offset), self._p_from_offset(offset)

    # Riemann invariant companion H(q) = integral from c* to q of sqrt(-A'B')

    def H(self, q):
        """
        H(q) for c* <= q < q_max, in closed form as the Prandtl-Meyer function of the Mach number:

            H = sqrt(k) arctan(sqrt((M^2-1)/k)) - arctan(sqrt(M^2-1)),    k = (gamma+1)/(gamma-1).
        """
        q, is_scalar = _as_array(q)
        self._check_speed(q, lower=-np.inf)
        if np.any(q < self.c_star * (1.0 - 4.0 * np.finfo(float).eps)):
            raise GasDomainError("H requires q >= c*")
        offset = np.maximum(q - self.c_star, 0.0)
        temperature = self._temperature(q * q)
        x = np.sqrt(np.maximum(-self._subsonic_factor(offset), 0.0) / temperature)
        k = (self.gamma + 1.0) / (self.gamma - 1.0)
        closed = np.sqrt(k) * np.arctan(x / np.sqrt(k)) - np.arctan(x)
        series = (x ** 3 / 3.0 * (1.0 - 1.0 / k) - x ** 5 / 5.0 * (1.0 - 1.0 / k ** 2)
                  + x ** 7 / 7.0 * (1.0 - 1.0 / k ** 3))
        return _restore(np.where(x < _H_SERIES_THRESHOLD, series, closed), is_scalar)

    def H_prime(self, q):
        q, is_scalar = _as_array(q)
        self._check_speed(q, lower=-np.inf)
        if np.any(q < self.c_star * (1.0 - 4.0 * np.finfo(float).eps)):
            raise GasDomainError("H requires q >= c*")
        offset = np.maximum(q - self.c_star, 0.0)
        value = np.sqrt(np.maximum(-self._subsonic_factor(offset), 0.0) / self._temperature(q * q)) / q
        return _restore(value, is_scalar)

    def characteristic_slope(self, q):
        """
        beta(q) = sqrt(-A'(q)/B'(q)), the slope dphi/dpsi of the characteristics; 0 for q <= c*.
        """
        q, is_scalar = _as_array(q)
        self._check_speed(q)
        offset = np.maximum(q - self.c_star, 0.0)
        temperature = self._temperature(q * q)
        value = np.sqrt(np.maximum(-self._subsonic_factor(offset), 0.0)) / temperature ** (self._n + 0.5)
        return _restore(value, is_scalar)


@functools.lru_cache(maxsize=8)
def gas_model(gamma=GAMMA_DEFAULT):
    """
    Returns a shared GasModel for `gamma`; building the memo costs a few hundred quadratures.
    """
    return GasModel(gamma)
