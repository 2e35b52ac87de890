"""
Defines the field classes that carry solutions in the potential plane: SubsonicField, SupersonicField,
PotentialPlaneField, TransonicSolution, and the CharacteristicPath returned by characteristic tracing.

Every field stores node values on a tensor grid, first index along phi and second along psi.
"""

import logging

import numpy as np
from scipy import interpolate

from . gasmodel import SUPERSONIC

logger = logging.getLogger(__name__)


def _gradient(values, coordinates, axis):
    if len(coordinates) < 2:
        return np.zeros_like(values)
    edge_order = 2 if len(coordinates) > 2 else 1
    return np.gradient(values, coordinates, axis=axis, edge_order=edge_order)


class PotentialPlaneField:
    """
    Speed samples q on a rectilinear (phi, psi) grid; the common input of the sonic diagnostics.
    """

    __slots__ = {
        "phi": "Increasing phi nodes",
        "psi": "Increasing psi nodes",
        "q": "Speed samples, shape (len(phi), len(psi))",
    }

    def __init__(self, *, phi, psi, q):
        self.phi = np.asarray(phi, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.q = np.asarray(q, dtype=float)
        if self.q.shape != (len(self.phi), len(self.psi)):
            raise ValueError(f"q has shape {self.q.shape}, grid is {len(self.phi)} x {len(self.psi)}")

    @property
    def shape(self):
        return self.q.shape

    def q_phi(self):
        return _gradient(self.q, self.phi, 0)

    def q_psi(self):
        return _gradient(self.q, self.psi, 1)


class SubsonicField:
    """
    Speed field on [zeta_minus, 0] x [0, m_in], phi-nodes graded toward the sonic line phi = 0.
    """

    __slots__ = {
        "phi": "phi nodes from zeta_minus to 0",
        "psi": "psi nodes from 0 to m_in",
        "q": "Speed samples in (0, c*], shape (len(phi), len(psi))",
        "c": "Dirichlet value at phi = 0",
        "maps": "BoundaryMaps whose Neumann data the field solves",
        "newton_iterations": "Newton iterations of the solve that produced the field",
        "history": "Residual/iterate history: list of dicts",
        "outer_iterations": "Outer fixed-point iterations (0 for a bare inner solve)",
    }

    def __init__(self, *, phi, psi, q, c, maps=None, newton_iterations=0, history=None, outer_iterations=0):
        self.phi = np.asarray(phi, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.c = float(c)
        self.maps = maps
        self.newton_iterations = newton_iterations
        self.history = list(history) if history is not None else []
        self.outer_iterations = outer_iterations

    @property
    def zeta_minus(self):
        return float(self.phi[0])

    @property
    def m_in(self):
        return float(self.psi[-1])

    def wall_speed(self):
        return self.q[:, -1]

    def q_phi(self):
        return _gradient(self.q, self.phi, 0)

    def q_psi(self):
        return _gradient(self.q, self.psi, 1)

    def to_potential_field(self):
        return PotentialPlaneField(phi=self.phi, psi=self.psi, q=self.q)


class SupersonicField:
    """
    Field on [0, zeta_plus] x [0, m] of Q = A(q) <= 0 together with the Riemann invariants
    W = Q_phi - sqrt(b(Q)) Q_psi and Z = -Q_phi - sqrt(b(Q)) Q_psi.

    phi-nodes are node 0 at the sonic line followed by a geometric ladder from the cutoff `eps`.
    `scale_power` is the exponent p of the expected behaviour -Q ~ phi^p near the sonic line; the
    interpolants work with values divided by the matching power of phi.
    """

    __slots__ = {
        "phi": "phi nodes: 0, then eps ... zeta_plus",
        "psi": "psi nodes from 0 to m",
        "Q": "Samples of A(q), shape (len(phi), len(psi))",
        "W": "Riemann invariant W samples",
        "Z": "Riemann invariant Z samples",
        "eps": "Cutoff abscissa of the regularized start",
        "scale_power": "Exponent p with -Q ~ phi^p near phi = 0",
        "maps": "BoundaryMaps of the downstream wall",
        "wall_source": "Samples of h~ on the phi nodes",
        "history": "Residual/iterate history: list of dicts",
        "outer_iterations": "Outer fixed-point iterations (0 for a bare linear solve)",
        "_scaled_interpolator": "Lazily built interpolant of Q/phi^p",
    }

    def __init__(self, *, phi, psi, Q, W=None, Z=None, eps, scale_power, maps=None, wall_source=None,
                 history=None, outer_iterations=0):
        self.phi = np.asarray(phi, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.W = np.zeros_like(self.Q) if W is None else np.asarray(W, dtype=float)
        self.Z = np.zeros_like(self.Q) if Z is None else np.asarray(Z, dtype=float)
        self.eps = float(eps)
        self.scale_power = float(scale_power)
        self.maps = maps
        self.wall_source = wall_source
        self.history = list(history) if history is not None else []
        self.outer_iterations = outer_iterations
        self._scaled_interpolator = None

    @property
    def zeta_plus(self):
        return float(self.phi[-1])

    @property
    def m(self):
        return float(self.psi[-1])

    @property
    def eps_index(self):
        """Index of the first node at or beyond the cutoff."""
        return int(np.searchsorted(self.phi, self.eps * (1.0 - 1e-12)))

    def _weight(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self.scale_power == 0.0:
            return np.ones_like(phi)
        return np.power(np.maximum(phi, 0.0), self.scale_power)

    def Q_at(self, phi, psi):
        """
        Q at arbitrary points: linear interpolation of Q/phi^p on [eps, zeta_plus] and the power law
        Q(eps, psi) (phi/eps)^p below the cutoff.
        """
        if self._scaled_interpolator is None:
            start = self.eps_index
            scaled = self.Q[start:] / self._weight(self.phi[start:])[:, None]
            self._scaled_interpolator = interpolate.RegularGridInterpolator(
                (self.phi[start:], self.psi), scaled, bounds_error=False, fill_value=None)
        phi_array = np.atleast_1d(np.asarray(phi, dtype=float)).ravel()
        psi_array = np.broadcast_to(np.atleast_1d(np.asarray(psi, dtype=float)).ravel(), phi_array.shape)
        clipped = np.clip(phi_array, self.eps, self.phi[-1])
        psi_clipped = np.clip(psi_array, self.psi[0], self.psi[-1])
        values = self._scaled_interpolator(np.column_stack((clipped, psi_clipped))) * self._weight(phi_array)
        return values if np.ndim(phi) else float(values[0])

    def speed(self, gas):
        """Speed q = A_+^-1(Q) on the nodes."""
        return gas.A_inv(np.minimum(self.Q, 0.0), SUPERSONIC)

    def Q_phi(self):
        return _gradient(self.Q, self.phi, 0)

    def Q_psi(self):
        return _gradient(self.Q, self.psi, 1)

    def wall_Q(self):
        return self.Q[:, -1]

    def to_potential_field(self, gas):
        return PotentialPlaneField(phi=self.phi, psi=self.psi, q=self.speed(gas))


class TransonicSolution:
    """
    Subsonic and supersonic fields joined on the sonic line phi = 0, with the flow angle theta and
    the physical coordinates (x, y) once reconstructed.

    The joined psi-nodes are those of the supersonic field; the subsonic rows are carried over at the
    same fraction of their own psi-extent m_in.
    """

    __slots__ = {
        "sub": "SubsonicField",
        "sup": "SupersonicField",
        "phi": "Joined phi nodes from zeta_minus to zeta_plus; the sonic line appears once",
        "psi": "psi nodes from 0 to m",
        "q": "Speed samples on the joined grid",
        "sonic_index": "Index of phi = 0 in the joined grid",
        "theta": "Flow angle samples, None until reconstructed",
        "x": "Physical abscissae, None until mapped",
        "y": "Physical ordinates, None until mapped",
        "matching_report": "One-sided derivative gaps at phi = 0",
        "curl_residual": "Relative discrete curl residual of the theta gradient",
    }

    def __init__(self, *, sub, sup, phi, psi, q, sonic_index, matching_report=None):
        self.sub = sub
        self.sup = sup
        self.phi = np.asarray(phi, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.sonic_index = int(sonic_index)
        self.theta = None
        self.x = None
        self.y = None
        self.matching_report = matching_report or {}
        self.curl_residual = None

    def q_phi(self):
        return _gradient(self.q, self.phi, 0)

    def q_psi(self):
        return _gradient(self.q, self.psi, 1)

    def to_potential_field(self):
        return PotentialPlaneField(phi=self.phi, psi=self.psi, q=self.q)


class CharacteristicPath:
    """
    A traced characteristic: samples of (phi, psi) with phi decreasing from the start, and the
    reflections at psi = 0 and psi = m.
    """

    __slots__ = {
        "phi": "phi samples, decreasing",
        "psi": "psi samples",
        "family": "'plus' or 'minus' at the start",
        "bounces": "List of (phi, wall) with wall 'axis' (psi = 0) or 'wall' (psi = m)",
        "terminated_at": "phi at which tracing stopped",
    }

    def __init__(self, *, phi, psi, family, bounces, terminated_at):
        self.phi = np.asarray(phi, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.family = family
        self.bounces = list(bounces)
        self.terminated_at = float(terminated_at)

    def wall_bounces(self):
        return [phi for phi, wall in self.bounces if wall == "wall"]

    def axis_bounces(self):
        return [phi for phi, wall in self.bounces if wall == "axis"]

    def __len__(self):
        return len(self.phi)
