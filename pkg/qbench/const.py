DOMAIN = "qbench"
SCHEMA_VERSION = "qbench/1"

CONF_NAME = "name"
CONF_SCHEMA = "schema"
CONF_FAMILY = "family"
CONF_D = "d"
CONF_J = "j"
CONF_K = "k"
CONF_GAIN = "gain"
CONF_N = "N"
CONF_M = "M"
CONF_BETA = "beta"
CONF_LAMBDA = "lambda"
CONF_K_WEIGHTS = "k_weights"
CONF_FORMULA_ID = "formula_id"
CONF_ENSEMBLE = "ensemble"
CONF_RUNS = "runs"
CONF_INPUT_PARAMS = "input_params"
CONF_PASSED = "passed"
CONF_TESTED = "tested"
CONF_MEAN_FIDELITY = "mean_fidelity"
CONF_STDERR = "stderr"
CONF_SAMPLES = "samples"
CONF_SPECS = "specs"

CONF_SCHEME = "scheme"
CONF_NODES = "nodes_per_dim"
CONF_PHASE_NODES = "phase_nodes"
CONF_MC_SAMPLES = "mc_samples"
CONF_CUTOFF = "noncompact_cutoff"
CONF_MAX_REFINEMENTS = "max_refinements"
CONF_TOLERANCE = "tolerance"
CONF_SEED = "seed"
CONF_WORKERS = "workers"
CONF_SQUEEZE_MAP = "squeeze_map"
CONF_N_MAX = "n_max"
CONF_Z = "z"

SCHEME_GAUSS_LEGENDRE = "gauss_legendre"
SCHEME_MONTE_CARLO = "monte_carlo"
SQUEEZE_MAP_RATIONAL = "rational"
SQUEEZE_MAP_TANH = "tanh"

DEFAULT_NODES = 64
DEFAULT_PHASE_NODES = 8
DEFAULT_MC_SAMPLES = 200_000
DEFAULT_CUTOFF = 1.0 - 1e-12
DEFAULT_MAX_REFINEMENTS = 2
DEFAULT_TOLERANCE = 1e-8
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1
MIN_NODES = 8
MIN_MC_SAMPLES = 10_000
DEFAULT_N_MAX = 80
DEFAULT_Z = 3.0

QUADRATURE_TOLERANCE = 1e-8
QUDIT_NORM_TOLERANCE = 1e-9
PERELOMOV_NORM_TOLERANCE = 1e-6
NONCONVERGENT_ERROR = 1e-3

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 2
EXIT_USAGE = 64
EXIT_DATA_FORMAT = 65
EXIT_IO_ERROR = 74

SWEEP_HEADER = ["family", "d_or_j", "k", "N", "M", "beta", "lambda", "F_c", "p_yes"]
