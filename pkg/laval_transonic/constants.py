"""
Constants to essentially be available globally.
"""

import logging

# Logging related
LOGGING_LEVEL = logging.INFO
LOGGING_LEVEL_VERBOSE = logging.DEBUG
LOG_FILE_NAME = "laval.log"
LOGGING_FORMAT = '%(name)s - %(levelname)s - %(message)s'

# Exit codes of the command-line front end
EXIT_SUCCESS = 0
EXIT_SOLVER_FAILURE = 1
EXIT_CONFIG_ERROR = 2

#   GAS CONSTANTS

GAMMA_DEFAULT = 1.4

# Functions of the gas reject speeds closer than this to the cavitation speed q_max
Q_MAX_GUARD = 1e-14

# Absolute tolerance of the adaptive quadratures behind A, B
QUAD_TOLERANCE = 1e-12

# Chebyshev memo of the sonic-regular factors A/(q-c*)^2 and B/(q-c*).
# Subsonic breakpoints are fractions of c*, supersonic breakpoints are fractions of q_max - c*.
CHEBYSHEV_DEGREE = 40
CHEBYSHEV_SUBSONIC_BREAKS = (0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0)
CHEBYSHEV_SUPERSONIC_BREAKS = (0.0, 0.3, 0.55, 0.72, 0.82, 0.9, 0.95)

# Inverse functions: iteration cap and residual tolerance (in the value of the function)
ROOT_MAX_ITERATIONS = 100
ROOT_TOLERANCE = 1e-15

#   NOZZLE CONSTANTS

L_MINUS_DEFAULT = -0.3
L_PLUS_DEFAULT = 0.3
F0_DEFAULT = 1.0
LAMBDA_DEFAULT = 3.0
DELTA_DEFAULT = 0.1

NOZZLE_KINDS = ("power_law", "straight_channel")

# Number of sample points for the admissibility checks
VALIDATION_SAMPLES = 201

# Relative slack allowed in the curvature envelope and compatibility checks
VALIDATION_SLACK = 1e-10

# The theory needs |l±| small; beyond the hard ceiling it is certainly outside its scope
LENGTH_HARD_CEILING = 1.0
LENGTH_SOFT_THRESHOLD = 0.5

# Newton polish steps applied after the monotone-interpolation inverse of a boundary map
MAP_INVERSE_POLISH_STEPS = 4

#   SUBSONIC SOLVER CONSTANTS

N_PHI_MINUS_DEFAULT = 128
N_PSI_DEFAULT = 32
GRADING_RATIO_DEFAULT = 1.1
# Largest allowed ratio between the widest and the narrowest φ-spacing of a graded grid
GRADING_MAX_SPREAD = 200.0

# Continuation c_k = c*(1 - 2^-k / 3) stops once c* - c_k < CONTINUATION_GAP * c*
CONTINUATION_GAP = 1e-6

TOL_INNER_DEFAULT = 1e-10
MAX_NEWTON_DEFAULT = 60
LINE_SEARCH_MIN_STEP = 2.0 ** -20

# Node values above c*(1 + SUBSONIC_EXCURSION) abort the subsonic solve
SUBSONIC_EXCURSION = 1e-8

# Floor for the degenerate diffusion coefficient E' inside the Newton Jacobian
JACOBIAN_DIFFUSION_FLOOR = 1e-300

#   SUPERSONIC SOLVER CONSTANTS

N_PHI_PLUS_DEFAULT = 128
EPS_CUT_FRACTION_DEFAULT = 1e-3
CFL_DEFAULT = 0.8
TOL_CONTRACTION_DEFAULT = 1e-9
MAX_CONTRACTION_DEFAULT = 60
# Contraction is declared stalled after this many consecutive ratios >= 1
CONTRACTION_STALL_WINDOW = 5
# Marching aborts when a CFL-limited step falls below this fraction of the current φ
CFL_COLLAPSE_FRACTION = 1e-14
MAX_BOUNCES = 100000

#   OUTER FIXED POINTS

DAMPING_DEFAULT = 0.5
TOL_OUTER_DEFAULT = 1e-8
MAX_OUTER_DEFAULT = 80

# Depressed subsonic seed c* - C |l_-|^(lambda_-/2 + 1): C is the constant of the inlet-speed
# window q_in ~ c* - C |x|^(lambda_-/2 + 1), taken as 1; the seed is floored at a fraction of c*.
DEPRESSED_SEED_CONSTANT = 1.0
DEPRESSED_SEED_FLOOR = 0.5

# Scaled supersonic seed: the closed-form power-law amplitude multiplied by this factor
SCALED_SEED_FACTOR = 2.0

# Number of wall/inlet samples per solver grid interval used to build the boundary maps
WALL_SAMPLE_FACTOR = 2

#   ASSEMBLY CONSTANTS

MASS_FLUX_TOLERANCE_DEFAULT = 1e-6
CURL_RESIDUAL_THRESHOLD_DEFAULT = 0.25
SPEED_FLOOR = 1e-3
MASS_STATIONS_DEFAULT = 5

#   DIAGNOSTICS AND REPORTING

# Exceptional-point tolerance in multiples of the local discretization error estimate
EXCEPTIONAL_TOL_FACTOR = 5.0
# Absolute floor of the exceptional-point tolerance, relative to max |q_psi| of the field
EXCEPTIONAL_TOL_FLOOR = 1e-12
# Supersonic margin for Riemann-invariant drift paths
SUPERSONIC_MARGIN = 0.0
DRIFT_PATHS_DEFAULT = 10

# Exponent regression windows as fractions of the coordinate extent
FIT_WINDOW_LOW = 1.0 / 16.0
FIT_WINDOW_HIGH = 1.0 / 2.0
FIT_TOLERANCE = 0.10
# The slope -Q_phi is fitted from a differenced field and gets a wider band
FIT_TOLERANCE_SLOPE = 0.15
FIT_BOUND_FRACTION = 0.9

RUN_MODES = ("subsonic", "supersonic", "transonic", "analyze", "convergence")
MIN_GRID_SIZE = 8
MIN_REFINEMENT_LEVELS = 3

# Names of emitted artifacts
MANIFEST_FILE_NAME = "manifest.json"
ERROR_FILE_NAME = "error.json"
RESIDUALS_FILE_NAME = "residuals.json"
FIT_REPORT_FILE_NAME = "fit_report.json"
DIAGNOSTICS_FILE_NAME = "diagnostics.json"
VALIDATION_FILE_NAME = "validation.json"
CONVERGENCE_FILE_NAME = "convergence.json"
SUBSONIC_FIELD_FILE_NAME = "subsonic_field.csv"
SUPERSONIC_FIELD_FILE_NAME = "supersonic_field.csv"
TRANSONIC_FIELD_FILE_NAME = "transonic_field.csv"
VTK_FILE_NAME = "transonic_field.vtk"
SNAPSHOT_DIR_NAME = "snapshots"

# Format of floats in CSV output; repr-exact so identical runs emit identical bytes
CSV_FLOAT_FORMAT = "{:.17g}"
