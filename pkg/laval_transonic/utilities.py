""" Small numerical helpers shared by the solver modules """

import numpy as np

from . constants import GRADING_MAX_SPREAD


def graded_nodes(n_intervals, ratio, max_spread=GRADING_MAX_SPREAD):
    """
    Returns n_intervals+1 nodes on [0, 1] whose spacing grows geometrically away from 0.

    The narrowest interval touches 0. The ratio is reduced when ratio**(n_intervals-1) would exceed
    `max_spread`, so that fine grids do not produce spacings below rounding level.
    """
    if n_intervals < 1:
        raise ValueError(f"need at least one interval, got {n_intervals}")
    if ratio <= 1.0 or n_intervals == 1:
        return np.linspace(0.0, 1.0, n_intervals + 1)
    if n_intervals > 1:
        ratio = min(ratio, max_spread ** (1.0 / (n_intervals - 1)))
    widths = ratio ** np.arange(n_intervals)
    nodes = np.concatenate(([0.0], np.cumsum(widths)))
    nodes /= nodes[-1]
    nodes[-1] = 1.0
    return nodes


def geometric_nodes(start, stop, n_nodes):
    """
    Returns n_nodes nodes from `start` to `stop` (both > 0) with a constant ratio between neighbours.
    """
    nodes = np.geomspace(start, stop, n_nodes)
    nodes[0] = start
    nodes[-1] = stop
    return nodes


def dual_widths(nodes):
    """
    Widths of the dual cells of a 1-D grid: half-intervals at the two ends.
    """
    steps = np.diff(nodes)
    widths = np.empty(len(nodes))
    widths[0] = 0.5 * steps[0]
    widths[-1] = 0.5 * steps[-1]
    widths[1:-1] = 0.5 * (steps[:-1] + steps[1:])
    return widths


def dual_faces(nodes):
    """
    Returns the left and right faces of each node's dual cell, clamped to the grid's extent.
    """
    midpoints = 0.5 * (nodes[:-1] + nodes[1:])
    left = np.concatenate(([nodes[0]], midpoints))
    right = np.concatenate((midpoints, [nodes[-1]]))
    return left, right


def max_norm(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))


def fit_power_law(abscissae, values):
    """
    Least-squares fit of log|values| = log C + p log|abscissae|.

    Returns (p, C). Entries with a zero value or abscissa are dropped; fewer than two usable
    entries gives (nan, nan).
    """
    abscissae = np.abs(np.asarray(abscissae, dtype=float))
    values = np.abs(np.asarray(values, dtype=float))
    usable = (abscissae > 0.0) & (values > 0.0) & np.isfinite(values)
    if np.count_nonzero(usable) < 2:
        return float("nan"), float("nan")
    design = np.column_stack((np.ones(np.count_nonzero(usable)), np.log(abscissae[usable])))
    coefficients, *_ = np.linalg.lstsq(design, np.log(values[usable]), rcond=None)
    return float(coefficients[1]), float(np.exp(coefficients[0]))


def observed_order(differences):
    """
    Observed convergence orders log2(d_k / d_{k+1}) of successive level differences.

    Differences at rounding level are reported as an exact match (order `inf`).
    """
    orders = []
    for coarse, fine in zip(differences[:-1], differences[1:]):
        if coarse <= 1e-13 and fine <= 1e-13:
            orders.append(float("inf"))
        elif fine <= 0.0:
            orders.append(float("inf"))
        else:
            orders.append(float(np.log2(coarse / fine)))
    return orders
