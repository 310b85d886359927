# constants.py
from fractions import Fraction

# Latency evaluation
MAX_DIRECT_LOG = 690.0  # ln(1e300); direct eval saturates above this
LOG_SAFE_LIMIT = 1e6
MONOTONE_GRID_POINTS = 1000
MONOTONE_GRID_RANGE = (1e-3, 1e3)

# Equilibrium checks
EQ_REL_TOL = 1e-9
DEFAULT_CAP = 2_000_000
DEFAULT_MAX_STEPS = 10_000
PARALLEL_MIN_PROFILES = 50_000

# Bound search
TRIPLE_REL_TOL = 1e-12
TRIPLE_CACHE_SIZE = 1 << 16
TRIPLE_RESIDUAL_TOL = 1e-9
TRIPLE_SCAN_POINTS = 256
X_CAP_FACTOR = 1e6
DEFAULT_T_MAX = 128.0
DEFAULT_GRID_POINTS = 96
DEFAULT_REFINE_TOL = 1e-10
DOUBLINGS = 4
GROWTH_LOG_MARGIN = 1e-6
GROWTH_STEP_RATIO = 0.75
DENOMINATOR_FLOOR = 1e-12
BOUND_TOL = 1e-6

# Random corpus bounds
CORPUS_MAX_PLAYERS = 4
CORPUS_MAX_RESOURCES = 4
CORPUS_MAX_STRATEGIES = 3
CORPUS_WEIGHTS = (Fraction(1), Fraction(1, 2), Fraction(2))

# Exit codes
EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_PARSE = 2
EXIT_CAP = 3
EXIT_NO_EQUILIBRIUM = 4

# Bound search grids
GHAT_X_LOW_FACTOR = 1e-4
GHAT_X_HIGH_FACTOR = 4.0
J_SPAN_FACTOR = 1e3
REFINE_ROUNDS = 20
GROWTH_PROBE = 1e3
