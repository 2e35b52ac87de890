"""
Reading and writing of fields and reports.

Fields go to CSV in long format, one row per grid node with phi varying slowest:

    phi,psi,q[,theta,x,y | Q,W,Z]

Reports go to JSON with sorted keys so that identical runs produce identical bytes.
"""

import csv
import json
import logging
import os

import numpy as np

from . classes_fields import PotentialPlaneField, SubsonicField, SupersonicField, TransonicSolution
from . constants import CSV_FLOAT_FORMAT
from . error_processing import ConfigError

logger = logging.getLogger(__name__)

FIELD_COLUMNS = ("phi", "psi", "q")


def to_jsonable(item):
    if isinstance(item, dict):
        return {str(key): to_jsonable(value) for key, value in item.items()}
    if isinstance(item, (list, tuple)):
        return [to_jsonable(value) for value in item]
    if isinstance(item, np.ndarray):
        return to_jsonable(item.tolist())
    if isinstance(item, (bool, np.bool_)):
        return bool(item)
    if isinstance(item, (int, np.integer)):
        return int(item)
    if isinstance(item, (float, np.floating)):
        return float(item)
    return item


def write_json(path, payload):
    with open(path, "w") as file:
        json.dump(to_jsonable(payload), file, indent=2, sort_keys=True)
        file.write("\n")
    return path


def read_json(path):
    with open(path) as file:
        return json.load(file)


def field_columns(field, gas=None):
    """Ordered dict of column name -> node array for any of the field classes."""
    if isinstance(field, TransonicSolution):
        columns = {"q": field.q}
        if field.theta is not None:
            columns["theta"] = field.theta
        if field.x is not None:
            columns["x"] = field.x
            columns["y"] = field.y
        return field.phi, field.psi, columns
    if isinstance(field, SupersonicField):
        if gas is None:
            raise ValueError("writing a SupersonicField needs the gas model")
        return field.phi, field.psi, {"q": field.speed(gas), "Q": field.Q, "W": field.W, "Z": field.Z}
    if isinstance(field, (SubsonicField, PotentialPlaneField)):
        return field.phi, field.psi, {"q": field.q}
    raise TypeError(f"cannot write a {type(field).__name__} as a field")


def write_field_csv(path, field, gas=None):
    phi, psi, columns = field_columns(field, gas)
    names = list(FIELD_COLUMNS[:2]) + list(columns)
    with open(path, "w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(names)
        for i, phi_value in enumerate(phi):
            for j, psi_value in enumerate(psi):
                row = [phi_value, psi_value] + [values[i, j] for values in columns.values()]
                writer.writerow([CSV_FLOAT_FORMAT.format(float(value)) for value in row])
    logger.debug(f"wrote {len(phi)} x {len(psi)} field to {path}")
    return path


def read_field_csv(path):
    """
    Imports a speed field on a rectilinear potential-plane grid from CSV with at least the columns
    phi, psi and q. Rows may come in any order but must cover the full tensor grid exactly once.
    """
    try:
        with open(path, newline="") as file:
            reader = csv.DictReader(file)
            missing = [name for name in FIELD_COLUMNS if name not in (reader.fieldnames or [])]
            if missing:
                raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
            rows = [(float(row["phi"]), float(row["psi"]), float(row["q"])) for row in reader]
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.array(rows)
    phi = np.unique(data[:, 0])
    psi = np.unique(data[:, 1])
    if len(phi) < 2 or len(psi) < 2 or len(data) != len(phi) * len(psi):
        raise ConfigError(f"{path}: {len(data)} rows do not form a rectilinear {len(phi)} x {len(psi)} grid")
    q = np.full((len(phi), len(psi)), np.nan)
    q[np.searchsorted(phi, data[:, 0]), np.searchsorted(psi, data[:, 1])] = data[:, 2]
    if np.isnan(q).any():
        raise ConfigError(f"{path}: grid nodes repeated or missing")
    if np.any(q <= 0.0):
        raise ConfigError(f"{path}: speeds must be positive")
    return PotentialPlaneField(phi=phi, psi=psi, q=q)


class SnapshotWriter:
    """
    Callable handed to the outer fixed points: writes the iterate of each outer iteration as
    `<directory>/<label>_<iteration>.csv`.
    """

    __slots__ = {
        "directory": "Target directory, created on first use",
        "label": "File name prefix",
        "gas": "GasModel for supersonic speeds",
        "written": "Paths written so far",
    }

    def __init__(self, *, directory, label, gas):
        self.directory = directory
        self.label = label
        self.gas = gas
        self.written = []

    def __call__(self, iteration, field):
        os.makedirs(self.directory, exist_ok=True)
        path = os.path.join(self.directory, f"{self.label}_{iteration:04d}.csv")
        self.written.append(write_field_csv(path, field, self.gas))
