"""
Command-line front end.

    laval run <config.toml> [--mode M] [--out DIR] [--dump] [--levels K]
    laval analyze <field.csv> [--out DIR] [--gamma G]
    laval converge <config.toml> [--levels K] [--out DIR]

Every run writes into its own directory <out>/<mode>-<UTC timestamp>/ holding a manifest.json, the
field CSVs, residual histories and reports. Exit status 0 on success, 1 when a solver or a
post-processing check gives up, 2 on configuration or validation errors; failures also leave a
machine-readable error.json in the run directory and on stderr.
"""

import argparse
import datetime
import logging
import os

import numpy as np
from scipy import interpolate

from . __version__ import __version__
from . import assembly
from . import sonic_analysis
from . import subsonic
from . import supersonic
from . config import load_config
from . constants import (CONVERGENCE_FILE_NAME,
                         DIAGNOSTICS_FILE_NAME,
                         ERROR_FILE_NAME,
                         EXIT_SUCCESS,
                         FIT_REPORT_FILE_NAME,
                         GAMMA_DEFAULT,
                         LOG_FILE_NAME,
                         LOGGING_FORMAT,
                         LOGGING_LEVEL,
                         LOGGING_LEVEL_VERBOSE,
                         MANIFEST_FILE_NAME,
                         MIN_REFINEMENT_LEVELS,
                         RESIDUALS_FILE_NAME,
                         RUN_MODES,
                         SNAPSHOT_DIR_NAME,
                         SUBSONIC_FIELD_FILE_NAME,
                         SUPERSONIC_FIELD_FILE_NAME,
                         TRANSONIC_FIELD_FILE_NAME,
                         VALIDATION_FILE_NAME,
                         VTK_FILE_NAME)
from . error_processing import (ConfigError,
                                LavalError,
                                error_payload,
                                fatal_developer_error,
                                fatal_error_without_traceback)
from . field_io import (SnapshotWriter,
                        read_field_csv,
                        write_field_csv,
                        write_json)
from . fit_report import fit_report
from . gasmodel import gas_model
from . nozzle import validate
from . utilities import max_norm, observed_order

logger = logging.getLogger(__name__)

CONVERGENCE_PARTS = ("subsonic", "supersonic")

# Sonic points at which the analyze mode traces characteristics
_CHARACTERISTIC_SAMPLES = 5


class RunDirectory:
    """
    The per-run output directory and the list of artifacts written into it.
    """

    __slots__ = {
        "path": "Absolute path of the directory",
        "artifacts": "File names written so far, in order",
    }

    def __init__(self, *, root, mode):
        stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        path = os.path.join(root, f"{mode}-{stamp}")
        suffix = 1
        while os.path.exists(path):
            suffix += 1
            path = os.path.join(root, f"{mode}-{stamp}-{suffix}")
        os.makedirs(path)
        self.path = os.path.abspath(path)
        self.artifacts = []

    def file(self, name):
        self.artifacts.append(name)
        return os.path.join(self.path, name)

    def json(self, name, payload):
        return write_json(self.file(name), payload)


def configure_logging(verbose=False, log_file=None):
    logging.basicConfig(level=LOGGING_LEVEL_VERBOSE if verbose else LOGGING_LEVEL,
                        filename=log_file if log_file is not None else LOG_FILE_NAME,
                        format=LOGGING_FORMAT)


def _prepare(config, run_dir):
    """Builds gas and nozzle, writes the admissibility report, and rejects inadmissible walls."""
    gas = gas_model(config.gas.gamma)
    spec = config.nozzle.build()
    report = validate(spec)
    run_dir.json(VALIDATION_FILE_NAME, report.as_dict())
    if not report.passed:
        failed = ", ".join(condition.name for condition in report.failed_conditions())
        raise ConfigError(f"nozzle fails admissibility conditions: {failed}")
    return gas, spec


def _snapshots(config, run_dir, label, gas):
    if not config.dump:
        return None
    return SnapshotWriter(directory=os.path.join(run_dir.path, SNAPSHOT_DIR_NAME), label=label, gas=gas)


def _closure(solution, spec, gas):
    return {
        "wall_image_error": assembly.wall_image_error(solution, spec),
        "wall_angle_error": assembly.wall_angle_error(solution),
        "station_mass_flux": assembly.station_mass_flux(solution, gas),
        "curl_residual": solution.curl_residual,
        "matching": solution.matching_report,
    }


def _sonic_characteristics(solution, diagnostics, gas):
    points = diagnostics.sonic_points
    picks = np.unique(np.linspace(0, len(points) - 1, min(_CHARACTERISTIC_SAMPLES, len(points))).astype(int))
    return [sonic_analysis.characteristics_from_sonic(solution, points[index], gas).as_dict() for index in picks]


def solve_transonic(spec, gas, config, sub_snapshot=None, sup_snapshot=None):
    """Both outer fixed points, joined, with theta and the physical coordinates reconstructed."""
    solver = config.solver
    sub = subsonic.outer_fixed_point(spec, gas, solver, snapshot=sub_snapshot)
    sup = supersonic.outer_fixed_point(spec, gas, solver, snapshot=sup_snapshot)
    solution = assembly.connect(sub, sup, gas, tolerance=solver.mass_flux_tolerance)
    assembly.reconstruct_theta(solution, gas, threshold=solver.curl_residual_threshold)
    assembly.to_physical(solution, gas)
    return solution


def _run_subsonic(config, run_dir, gas, spec):
    field = subsonic.outer_fixed_point(spec, gas, config.solver, snapshot=_snapshots(config, run_dir, "subsonic", gas))
    write_field_csv(run_dir.file(SUBSONIC_FIELD_FILE_NAME), field)
    run_dir.json(RESIDUALS_FILE_NAME, {"subsonic": field.history, "flux_balance": subsonic.flux_balance(field)})
    run_dir.json(FIT_REPORT_FILE_NAME, fit_report(spec, gas, sub=field, config=config.solver))


def _run_supersonic(config, run_dir, gas, spec):
    field = supersonic.outer_fixed_point(spec, gas, config.solver,
                                         snapshot=_snapshots(config, run_dir, "supersonic", gas))
    write_field_csv(run_dir.file(SUPERSONIC_FIELD_FILE_NAME), field, gas)
    run_dir.json(RESIDUALS_FILE_NAME, {"supersonic": field.history})
    run_dir.json(FIT_REPORT_FILE_NAME, fit_report(spec, gas, sup=field, config=config.solver))


def _run_transonic(config, run_dir, gas, spec):
    solution = solve_transonic(spec, gas, config,
                               sub_snapshot=_snapshots(config, run_dir, "subsonic", gas),
                               sup_snapshot=_snapshots(config, run_dir, "supersonic", gas))
    write_field_csv(run_dir.file(SUBSONIC_FIELD_FILE_NAME), solution.sub)
    write_field_csv(run_dir.file(SUPERSONIC_FIELD_FILE_NAME), solution.sup, gas)
    write_field_csv(run_dir.file(TRANSONIC_FIELD_FILE_NAME), solution)
    assembly.write_vtk(solution, run_dir.file(VTK_FILE_NAME))
    run_dir.json(RESIDUALS_FILE_NAME, {"subsonic": solution.sub.history, "supersonic": solution.sup.history})
    run_dir.json(FIT_REPORT_FILE_NAME, fit_report(spec, gas, sub=solution.sub, sup=solution.sup,
                                                  config=config.solver))
    # a straight channel has Q = 0 and no characteristics to trace
    drift_paths = config.solver.drift_paths if np.any(solution.sup.Q) else 0
    diagnostics = sonic_analysis.analyze(solution, gas, spec=spec, drift_paths=drift_paths)
    payload = diagnostics.as_dict()
    payload["closure"] = _closure(solution, spec, gas)
    if config.mode == "analyze":
        payload["sonic_characteristics"] = _sonic_characteristics(solution, diagnostics, gas)
    run_dir.json(DIAGNOSTICS_FILE_NAME, payload)


def _level_config(config, level):
    return config.solver.refined(2 ** level)


def _subsonic_difference(coarse, fine):
    """max |q_coarse - q_fine| at the coarse nodes, both fields on normalized coordinates."""
    fine_grid = (1.0 - fine.phi / fine.zeta_minus, fine.psi / fine.m_in)
    table = interpolate.RegularGridInterpolator(fine_grid, fine.q, bounds_error=False, fill_value=None)
    s, t = np.meshgrid(1.0 - coarse.phi / coarse.zeta_minus, coarse.psi / coarse.m_in, indexing="ij")
    return max_norm(table(np.column_stack((s.ravel(), t.ravel()))).reshape(s.shape) - coarse.q)


def _supersonic_difference(coarse, fine):
    """max |Q_coarse - Q_fine| at the coarse nodes, both fields on normalized coordinates."""
    s, t = np.meshgrid(coarse.phi / coarse.zeta_plus, coarse.psi / coarse.m, indexing="ij")
    values = fine.Q_at(s.ravel() * fine.zeta_plus, t.ravel() * fine.m).reshape(s.shape)
    return max_norm(values - coarse.Q)


def _study(fields, difference):
    differences = [difference(coarse, fine) for coarse, fine in zip(fields[:-1], fields[1:])]
    orders = observed_order(differences)
    if all(order == float("inf") for order in orders):
        status = "exact"
    elif all(order >= 1.0 for order in orders):
        status = "pass"
    else:
        status = "fail"
    return {"differences": differences, "orders": orders, "status": status}


def convergence_study(config, levels=None, parts=CONVERGENCE_PARTS):
    """
    Solves on `levels` grids, each refining the previous by 2 in every direction, and reports the
    max-norm differences of successive levels with the observed orders. Passing needs order >= 1
    (an exact match counts) for every part.
    """
    levels = levels if levels is not None else config.levels
    if levels < MIN_REFINEMENT_LEVELS:
        raise ConfigError(f"a convergence study needs at least {MIN_REFINEMENT_LEVELS} levels, got {levels}")
    unknown = sorted(set(parts) - set(CONVERGENCE_PARTS))
    if unknown:
        raise ConfigError(f"unknown convergence parts: {', '.join(unknown)}")
    gas = gas_model(config.gas.gamma)
    spec = config.nozzle.build()
    solvers = [_level_config(config, level) for level in range(levels)]
    report = {"levels": [{"n_phi_minus": s.n_phi_minus, "n_phi_plus": s.n_phi_plus, "n_psi": s.n_psi}
                         for s in solvers], "parts": {}}
    if "subsonic" in parts:
        fields = []
        for solver in solvers:
            logger.info(f"convergence study: subsonic level {solver.n_phi_minus} x {solver.n_psi}")
            fields.append(subsonic.outer_fixed_point(spec, gas, solver))
        report["parts"]["subsonic"] = _study(fields, _subsonic_difference)
    if "supersonic" in parts:
        fields = []
        for solver in solvers:
            logger.info(f"convergence study: supersonic level {solver.n_phi_plus} x {solver.n_psi}")
            fields.append(supersonic.outer_fixed_point(spec, gas, solver))
        report["parts"]["supersonic"] = _study(fields, _supersonic_difference)
    report["passed"] = all(part["status"] != "fail" for part in report["parts"].values())
    return report


def _run_convergence(config, run_dir, gas, spec):
    run_dir.json(CONVERGENCE_FILE_NAME, convergence_study(config))


_PIPELINES = {
    "subsonic": _run_subsonic,
    "supersonic": _run_supersonic,
    "transonic": _run_transonic,
    "analyze": _run_transonic,
    "convergence": _run_convergence,
}


def _write_manifest(config, run_dir, status):
    manifest = {"config": config.as_dict(), "sha256": config.digest(), "version": __version__,
                "status": status, "artifacts": list(run_dir.artifacts)}
    write_json(os.path.join(run_dir.path, MANIFEST_FILE_NAME), manifest)


def run(config):
    """
    Executes the pipeline of `config.mode` inside a fresh run directory and returns the exit status.
    """
    if config.mode not in _PIPELINES:
        fatal_developer_error(f"mode {config.mode!r} passed validation but has no pipeline")
    run_dir = RunDirectory(root=config.output_dir, mode=config.mode)
    logger.info(f"{config.mode} run in {run_dir.path}")
    try:
        gas, spec = _prepare(config, run_dir)
        _PIPELINES[config.mode](config, run_dir, gas, spec)
    except LavalError as exc:
        run_dir.json(ERROR_FILE_NAME, error_payload(exc))
        _write_manifest(config, run_dir, "error")
        raise
    _write_manifest(config, run_dir, "ok")
    print(run_dir.path)
    return EXIT_SUCCESS


def analyze_file(path, out=None, gamma=GAMMA_DEFAULT, tol=None):
    """Diagnostics of an imported field; the JSON goes next to the input unless `out` names a directory."""
    gas = gas_model(gamma)
    field = read_field_csv(path)
    diagnostics = sonic_analysis.analyze(field, gas, tol=tol)
    directory = out if out is not None else os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    target = os.path.join(directory, DIAGNOSTICS_FILE_NAME)
    write_json(target, diagnostics.as_dict())
    print(target)
    return EXIT_SUCCESS


def _parser():
    parser = argparse.ArgumentParser(prog="laval", description="Transonic flow in a de Laval nozzle")
    parser.add_argument("--verbose", action="store_true", help="log per-iteration residuals")
    parser.add_argument("--log-file", default=None, help=f"log file (default {LOG_FILE_NAME})")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="solve as configured")
    run_parser.add_argument("config", help="TOML configuration file")
    run_parser.add_argument("--mode", choices=RUN_MODES, default=None)
    run_parser.add_argument("--out", default=None, help="parent directory of the run directory")
    run_parser.add_argument("--dump", action="store_true", default=None, help="write per-iteration snapshots")
    run_parser.add_argument("--levels", type=int, default=None, help="refinement levels of a convergence run")

    analyze_parser = commands.add_parser("analyze", help="sonic diagnostics of a field CSV")
    analyze_parser.add_argument("field", help="CSV with columns phi, psi, q")
    analyze_parser.add_argument("--out", default=None)
    analyze_parser.add_argument("--gamma", type=float, default=GAMMA_DEFAULT)
    analyze_parser.add_argument("--tol", type=float, default=None, help="absolute exceptional-point tolerance")

    converge_parser = commands.add_parser("converge", help="grid-refinement study")
    converge_parser.add_argument("config", help="TOML configuration file")
    converge_parser.add_argument("--levels", type=int, default=None)
    converge_parser.add_argument("--out", default=None)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    configure_logging(args.verbose, args.log_file)
    try:
        if args.command == "analyze":
            return analyze_file(args.field, out=args.out, gamma=args.gamma, tol=args.tol)
        config = load_config(args.config)
        if args.command == "converge":
            config = config.with_overrides(mode="convergence", output_dir=args.out, levels=args.levels)
        else:
            config = config.with_overrides(mode=args.mode, output_dir=args.out, dump=args.dump,
                                           levels=args.levels)
        return run(config)
    except LavalError as exc:
        return fatal_error_without_traceback(exc)
