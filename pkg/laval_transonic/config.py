"""
Run configuration: the gas, nozzle, solver and run blocks of a TOML configuration file, merged over
the defaults in constants.py and validated.

See docs/config_schema.md for the documented schema.
"""

import hashlib
import json
import logging
import tomllib

from . constants import (CFL_DEFAULT,
                         CURL_RESIDUAL_THRESHOLD_DEFAULT,
                         DAMPING_DEFAULT,
                         DELTA_DEFAULT,
                         DRIFT_PATHS_DEFAULT,
                         EPS_CUT_FRACTION_DEFAULT,
                         F0_DEFAULT,
                         FIT_WINDOW_HIGH,
                         FIT_WINDOW_LOW,
                         GAMMA_DEFAULT,
                         GRADING_RATIO_DEFAULT,
                         L_MINUS_DEFAULT,
                         L_PLUS_DEFAULT,
                         LAMBDA_DEFAULT,
                         MASS_FLUX_TOLERANCE_DEFAULT,
                         MAX_CONTRACTION_DEFAULT,
                         MAX_NEWTON_DEFAULT,
                         MAX_OUTER_DEFAULT,
                         MIN_GRID_SIZE,
                         MIN_REFINEMENT_LEVELS,
                         N_PHI_MINUS_DEFAULT,
                         N_PHI_PLUS_DEFAULT,
                         N_PSI_DEFAULT,
                         NOZZLE_KINDS,
                         RUN_MODES,
                         TOL_CONTRACTION_DEFAULT,
                         TOL_INNER_DEFAULT,
                         TOL_OUTER_DEFAULT)
from . error_processing import ConfigError, NozzleParameterError
from . import nozzle

logger = logging.getLogger(__name__)

SUBSONIC_SEEDS = ("sonic", "depressed")
SUPERSONIC_SEEDS = ("power_law", "scaled")


def _number(block, key, value, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{block}] {key} must be a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"[{block}] {key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _positive(block, key, value):
    if not value > 0:
        raise ConfigError(f"[{block}] {key} must be positive, got {value}")
    return value


class GasConfig:
    __slots__ = {
        "gamma": "Adiabatic exponent, > 1",
    }

    def __init__(self, *, gamma=GAMMA_DEFAULT):
        gamma = _number("gas", "gamma", gamma)
        if not gamma > 1.0:
            raise ConfigError(f"[gas] gamma must exceed 1, got {gamma}")
        self.gamma = gamma

    def as_dict(self):
        return {"gamma": self.gamma}


class NozzleConfig:
    """
    Nozzle block. kind = "power_law" builds the default wall family; kind = "straight_channel"
    builds the parallel-wall fixture and ignores lambda and delta.
    """

    __slots__ = {
        "kind": "'power_law' or 'straight_channel'",
        "l_minus": "Inlet abscissa, < 0",
        "l_plus": "Exit abscissa, > 0",
        "f0": "Throat half-height",
        "lambda_minus": "Upstream curvature exponent",
        "lambda_plus": "Downstream curvature exponent",
        "delta": "Curvature amplitude",
    }

    def __init__(self, *, kind="power_law", l_minus=L_MINUS_DEFAULT, l_plus=L_PLUS_DEFAULT, f0=F0_DEFAULT,
                 lambda_minus=LAMBDA_DEFAULT, lambda_plus=LAMBDA_DEFAULT, delta=DELTA_DEFAULT):
        if kind not in NOZZLE_KINDS:
            raise ConfigError(f"[nozzle] kind must be one of {NOZZLE_KINDS}, got {kind!r}")
        self.kind = kind
        self.l_minus = _number("nozzle", "l_minus", l_minus)
        self.l_plus = _number("nozzle", "l_plus", l_plus)
        self.f0 = _positive("nozzle", "f0", _number("nozzle", "f0", f0))
        self.lambda_minus = _number("nozzle", "lambda_minus", lambda_minus)
        self.lambda_plus = _number("nozzle", "lambda_plus", lambda_plus)
        self.delta = _number("nozzle", "delta", delta)
        if not self.l_minus < 0.0 < self.l_plus:
            raise ConfigError(f"[nozzle] need l_minus < 0 < l_plus, got {self.l_minus}, {self.l_plus}")

    def build(self):
        """Returns the NozzleSpec described by the block."""
        try:
            if self.kind == nozzle.STRAIGHT_CHANNEL:
                return nozzle.straight_channel(self.l_minus, self.l_plus, self.f0)
            return nozzle.default_wall(self.l_minus, self.l_plus, self.f0,
                                       self.lambda_minus, self.lambda_plus, self.delta)
        except NozzleParameterError as exc:
            raise ConfigError(f"[nozzle] {exc.message}") from exc

    def as_dict(self):
        return {"kind": self.kind, "l_minus": self.l_minus, "l_plus": self.l_plus, "f0": self.f0,
                "lambda_minus": self.lambda_minus, "lambda_plus": self.lambda_plus, "delta": self.delta}


class SolverConfig:
    """
    Grid sizes, tolerances, iteration caps and the other knobs of the three solvers and of the
    post-processing checks.
    """

    __slots__ = {
        "n_phi_minus": "phi-intervals of the subsonic grid",
        "n_psi": "psi-intervals of both grids",
        "grading_ratio": "Geometric spacing ratio of the subsonic phi-grid toward the sonic line",
        "schedule": "Explicit continuation values of the outlet speed, or None for the default schedule",
        "tol_inner": "Newton residual tolerance relative to the total turning",
        "max_newton": "Newton iteration cap per inner solve",
        "subsonic_seed": "'sonic' (q = c*) or 'depressed' initial boundary speeds of the subsonic fixed point",
        "supersonic_seed": "'power_law' (closed-form amplitude) or 'scaled' initial Q~ of the supersonic fixed point",
        "n_phi_plus": "phi-intervals of the supersonic grid",
        "eps_cut_fraction": "Cutoff of the regularized supersonic start as a fraction of zeta_plus",
        "cfl": "Courant number of the characteristic march",
        "tol_contraction": "Relative weighted-norm tolerance of the inner contraction",
        "max_contraction": "Iteration cap of the inner contraction",
        "damping": "Relaxation factor of the outer fixed points, in (0, 1]",
        "tol_outer": "Sup-change tolerance of the outer fixed points",
        "max_outer": "Iteration cap of the outer fixed points",
        "mass_flux_tolerance": "Relative tolerance between m_in and m when connecting",
        "curl_residual_threshold": "Largest accepted relative curl residual of the theta gradient",
        "fit_window_low": "Lower end of the exponent-fit window as a fraction of the coordinate extent",
        "fit_window_high": "Upper end of the exponent-fit window as a fraction of the coordinate extent",
        "drift_paths": "Number of characteristics traced for the Riemann-invariant drift",
    }

    def __init__(self, *, n_phi_minus=N_PHI_MINUS_DEFAULT, n_psi=N_PSI_DEFAULT,
                 grading_ratio=GRADING_RATIO_DEFAULT, schedule=None, tol_inner=TOL_INNER_DEFAULT,
                 max_newton=MAX_NEWTON_DEFAULT, subsonic_seed="sonic", n_phi_plus=N_PHI_PLUS_DEFAULT,
                 supersonic_seed="power_law", eps_cut_fraction=EPS_CUT_FRACTION_DEFAULT, cfl=CFL_DEFAULT,
                 tol_contraction=TOL_CONTRACTION_DEFAULT, max_contraction=MAX_CONTRACTION_DEFAULT,
                 damping=DAMPING_DEFAULT, tol_outer=TOL_OUTER_DEFAULT, max_outer=MAX_OUTER_DEFAULT,
                 mass_flux_tolerance=MASS_FLUX_TOLERANCE_DEFAULT,
                 curl_residual_threshold=CURL_RESIDUAL_THRESHOLD_DEFAULT,
                 fit_window_low=FIT_WINDOW_LOW, fit_window_high=FIT_WINDOW_HIGH,
                 drift_paths=DRIFT_PATHS_DEFAULT):
        for key, value in (("n_phi_minus", n_phi_minus), ("n_psi", n_psi), ("n_phi_plus", n_phi_plus)):
            size = _number("solver", key, value, integer=True)
            if size < MIN_GRID_SIZE:
                raise ConfigError(f"[solver] {key} must be at least {MIN_GRID_SIZE}, got {size}")
            setattr(self, key, size)
        for key, value in (("tol_inner", tol_inner), ("tol_contraction", tol_contraction),
                           ("tol_outer", tol_outer), ("mass_flux_tolerance", mass_flux_tolerance),
                           ("curl_residual_threshold", curl_residual_threshold),
                           ("eps_cut_fraction", eps_cut_fraction)):
            setattr(self, key, _positive("solver", key, _number("solver", key, value)))
        for key, value in (("max_newton", max_newton), ("max_contraction", max_contraction),
                           ("max_outer", max_outer), ("drift_paths", drift_paths)):
            setattr(self, key, _positive("solver", key, _number("solver", key, value, integer=True)))
        self.grading_ratio = _number("solver", "grading_ratio", grading_ratio)
        if self.grading_ratio < 1.0:
            raise ConfigError(f"[solver] grading_ratio must be at least 1, got {self.grading_ratio}")
        self.damping = _number("solver", "damping", damping)
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError(f"[solver] damping must lie in (0, 1], got {self.damping}")
        self.cfl = _number("solver", "cfl", cfl)
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"[solver] cfl must lie in (0, 1], got {self.cfl}")
        if not self.eps_cut_fraction < 1.0:
            raise ConfigError(f"[solver] eps_cut_fraction must be below 1, got {self.eps_cut_fraction}")
        self.fit_window_low = _number("solver", "fit_window_low", fit_window_low)
        self.fit_window_high = _number("solver", "fit_window_high", fit_window_high)
        if not 0.0 < self.fit_window_low < self.fit_window_high <= 1.0:
            raise ConfigError("[solver] need 0 < fit_window_low < fit_window_high <= 1")
        if subsonic_seed not in SUBSONIC_SEEDS:
            raise ConfigError(f"[solver] subsonic_seed must be one of {SUBSONIC_SEEDS}, got {subsonic_seed!r}")
        self.subsonic_seed = subsonic_seed
        if supersonic_seed not in SUPERSONIC_SEEDS:
            raise ConfigError(f"[solver] supersonic_seed must be one of {SUPERSONIC_SEEDS}, got {supersonic_seed!r}")
        self.supersonic_seed = supersonic_seed
        if schedule is not None:
            if not isinstance(schedule, (list, tuple)) or not schedule:
                raise ConfigError("[solver] schedule must be a nonempty list of speeds")
            schedule = [_positive("solver", "schedule", _number("solver", "schedule", c)) for c in schedule]
            if any(later <= earlier for earlier, later in zip(schedule[:-1], schedule[1:])):
                raise ConfigError("[solver] schedule must be strictly increasing")
        self.schedule = schedule

    def as_dict(self):
        return {key: getattr(self, key) for key in self.__slots__}

    def refined(self, factor):
        """Copy with every grid size multiplied by `factor`."""
        values = self.as_dict()
        for key in ("n_phi_minus", "n_psi", "n_phi_plus"):
            values[key] = int(values[key] * factor)
        return SolverConfig(**values)


class RunConfig:
    __slots__ = {
        "gas": "GasConfig",
        "nozzle": "NozzleConfig",
        "solver": "SolverConfig",
        "mode": "One of RUN_MODES",
        "output_dir": "Directory under which the per-run directory is created",
        "dump": "Write per-outer-iteration snapshots",
        "levels": "Refinement levels of a convergence study",
    }

    def __init__(self, *, gas=None, nozzle=None, solver=None, mode="transonic", output_dir="runs",
                 dump=False, levels=MIN_REFINEMENT_LEVELS):
        self.gas = gas if gas is not None else GasConfig()
        self.nozzle = nozzle if nozzle is not None else NozzleConfig()
        self.solver = solver if solver is not None else SolverConfig()
        if mode not in RUN_MODES:
            raise ConfigError(f"[run] mode must be one of {RUN_MODES}, got {mode!r}")
        self.mode = mode
        if not isinstance(output_dir, str) or not output_dir:
            raise ConfigError("[run] output_dir must be a nonempty string")
        self.output_dir = output_dir
        if not isinstance(dump, bool):
            raise ConfigError(f"[run] dump must be true or false, got {dump!r}")
        self.dump = dump
        levels = _number("run", "levels", levels, integer=True)
        if levels < MIN_REFINEMENT_LEVELS:
            raise ConfigError(f"[run] levels must be at least {MIN_REFINEMENT_LEVELS}, got {levels}")
        self.levels = levels

    def as_dict(self):
        """Canonical, fully-defaulted configuration."""
        return {
            "gas": self.gas.as_dict(),
            "nozzle": self.nozzle.as_dict(),
            "solver": self.solver.as_dict(),
            "run": {"mode": self.mode, "output_dir": self.output_dir, "dump": self.dump, "levels": self.levels},
        }

    def digest(self):
        """SHA-256 of the canonical configuration; identifies a run."""
        canonical = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, *, mode=None, output_dir=None, dump=None, levels=None):
        values = self.as_dict()["run"]
        if mode is not None:
            values["mode"] = mode
        if output_dir is not None:
            values["output_dir"] = output_dir
        if dump is not None:
            values["dump"] = dump
        if levels is not None:
            values["levels"] = levels
        return RunConfig(gas=self.gas, nozzle=self.nozzle, solver=self.solver, **values)


_BLOCKS = {
    "gas": GasConfig,
    "nozzle": NozzleConfig,
    "solver": SolverConfig,
}


def _block(name, cls, values):
    if not isinstance(values, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = sorted(set(values) - set(cls.__slots__))
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {', '.join(unknown)}")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def config_from_dict(data):
    """
    Builds a RunConfig from a dict shaped like the TOML file, merging over the defaults.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    unknown = sorted(set(data) - set(_BLOCKS) - {"run"})
    if unknown:
        raise ConfigError(f"unknown configuration blocks: {', '.join(unknown)}")
    blocks = {name: _block(name, cls, data.get(name, {})) for name, cls in _BLOCKS.items()}
    run = data.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("[run] must be a table")
    unknown = sorted(set(run) - {"mode", "output_dir", "dump", "levels"})
    if unknown:
        raise ConfigError(f"[run] unknown keys: {', '.join(unknown)}")
    return RunConfig(**blocks, **run)


def load_config(path):
    """
    Reads and validates a TOML configuration file.
    """
    try:
        with open(path, "rb") as config_file:
            data = tomllib.load(config_file)
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    config = config_from_dict(data)
    logger.info(f"loaded configuration {path} (sha256 {config.digest()[:12]})")
    return config
