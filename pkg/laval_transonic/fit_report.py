"""
Exponent regression near the sonic line.

Each row fits a power law to one quantity over a window [low, high] of |phi|, given as fractions of
the extent zeta_minus or zeta_plus, and compares the measured exponent with the predicted one:

    c* - q       ~ |phi|^(lambda_-/2 + 1)         subsonic, mid-channel
    -Q           ~ phi^(lambda_+ + 2)             supersonic, mid-channel
    -Q_phi       ~ phi^(lambda_+ + 1)             supersonic, mid-channel
    max |Q_psi| <= C phi^(3 lambda_+/2 + 1)       supersonic, a bound
    h~           ~ phi^(5 lambda_+/4 + 1/2)       downstream wall source
"""

import logging

import numpy as np

from . constants import (FIT_BOUND_FRACTION,
                         FIT_TOLERANCE,
                         FIT_TOLERANCE_SLOPE,
                         FIT_WINDOW_HIGH,
                         FIT_WINDOW_LOW)
from . error_processing import log_nonfatal_error
from . utilities import fit_power_law

logger = logging.getLogger(__name__)

ESTIMATE = "estimate"
BOUND = "bound"


def _window(phi, extent, low, high):
    distance = np.abs(phi)
    return (distance >= low * abs(extent)) & (distance <= high * abs(extent))


def _mid_column(psi):
    return int(np.argmin(np.abs(psi - 0.5 * psi[-1])))


def fit_row(name, abscissae, values, predicted, kind=ESTIMATE, tolerance=FIT_TOLERANCE):
    """
    One row of the report. An estimate passes when the measured exponent lies within `tolerance`
    (relative) of the prediction, a bound when it is at least FIT_BOUND_FRACTION of it. Quantities
    that vanish on the window are reported as not applicable.
    """
    values = np.asarray(values, dtype=float)
    row = {"name": name, "kind": kind, "predicted": float(predicted), "samples": int(len(values))}
    if len(values) == 0 or not np.any(values):
        row.update(measured=None, coefficient=None, status="not_applicable", passed=None)
        return row
    measured, coefficient = fit_power_law(abscissae, values)
    if kind == BOUND:
        passed = bool(measured >= FIT_BOUND_FRACTION * predicted)
        row["threshold"] = FIT_BOUND_FRACTION * predicted
    else:
        passed = bool(abs(measured - predicted) <= tolerance * abs(predicted))
        row["tolerance"] = tolerance
    row.update(measured=measured, coefficient=coefficient, status="pass" if passed else "fail", passed=passed)
    return row


def subsonic_rows(field, spec, gas, low=FIT_WINDOW_LOW, high=FIT_WINDOW_HIGH):
    inside = _window(field.phi, field.zeta_minus, low, high) & (field.phi < 0.0)
    column = _mid_column(field.psi)
    return [fit_row("subsonic_rate", field.phi[inside], gas.c_star - field.q[inside, column],
                    spec.lambda_minus / 2.0 + 1.0)]


def supersonic_rows(field, spec, low=FIT_WINDOW_LOW, high=FIT_WINDOW_HIGH):
    lam = spec.lambda_plus
    inside = _window(field.phi, field.zeta_plus, low, high) & (field.phi > 0.0)
    column = _mid_column(field.psi)
    phi = field.phi[inside]
    rows = [
        fit_row("supersonic_Q", phi, -field.Q[inside, column], lam + 2.0),
        fit_row("supersonic_Q_phi", phi, -field.Q_phi()[inside, column], lam + 1.0,
                tolerance=FIT_TOLERANCE_SLOPE),
        fit_row("supersonic_Q_psi_bound", phi, np.max(np.abs(field.Q_psi()[inside]), axis=1),
                1.5 * lam + 1.0, kind=BOUND),
    ]
    if field.wall_source is not None:
        rows.append(fit_row("boundary_source", phi, np.asarray(field.wall_source)[inside], 1.25 * lam + 0.5))
    return rows


def second_derivative_report(field, spec, low=FIT_WINDOW_LOW, high=FIT_WINDOW_HIGH):
    """max |Q_phi_phi| / phi^lambda_+ on the fit window."""
    inside = _window(field.phi, field.zeta_plus, low, high) & (field.phi > 0.0)
    if not np.any(inside):
        return {"max_ratio": None}
    second = np.gradient(field.Q_phi(), field.phi, axis=0)[inside]
    ratio = np.abs(second) / np.power(field.phi[inside], spec.lambda_plus)[:, None]
    return {"max_ratio": float(np.max(ratio))}


def fit_report(spec, gas, sub=None, sup=None, config=None):
    """Fit rows for whichever of the two fields are given, with an overall pass flag."""
    low = config.fit_window_low if config is not None else FIT_WINDOW_LOW
    high = config.fit_window_high if config is not None else FIT_WINDOW_HIGH
    rows = []
    if sub is not None:
        rows.extend(subsonic_rows(sub, spec, gas, low, high))
    if sup is not None:
        rows.extend(supersonic_rows(sup, spec, low, high))
    for row in rows:
        if row["passed"] is False:
            log_nonfatal_error(f"fit '{row['name']}': measured exponent {row['measured']:.4g}, "
                               f"predicted {row['predicted']:.4g}")
    report = {"window": [low, high], "rows": rows,
              "passed": all(row["passed"] is not False for row in rows)}
    if sup is not None:
        report["second_derivative"] = second_derivative_report(sup, spec, low, high)
    return report
