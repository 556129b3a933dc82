DEFAULT_NUM_THREADS = 1024
DEVICE_VAR_PREFIX = "gpu_"
DEFAULT_INDENT = 4

# INF sentinel per DSL numeric type: half the type maximum so that one relaxation
# (INF + weight) cannot overflow.
INF_BY_TYPE = {
    "int":    (2**31 - 1) // 2,
    "long":   (2**63 - 1) // 2,
    "float":  3.4028234663852886e38 / 2,
    "double": 1.7976931348623157e308 / 2,
}

# fixedPoint iteration cap: FIXED_POINT_CAP_PER_NODE * n + FIXED_POINT_CAP_BASE
FIXED_POINT_CAP_PER_NODE = 10
FIXED_POINT_CAP_BASE = 100

# Edge weights for unweighted inputs
DEFAULT_MIN_WEIGHT = 1
DEFAULT_MAX_WEIGHT = 100

# RMAT quadrant probabilities
RMAT_A = 0.57
RMAT_B = 0.19
RMAT_C = 0.19
RMAT_D = 0.05
# consecutive RMAT rounds without a usable pair before generation gives up
RMAT_MAX_STALLED_ROUNDS = 64

# Edge weights are C ints on every backend
MAX_WEIGHT = 2**31 - 1

ORACLE_TC_MAX_NODES = 256

# check tolerances: (kind, value); kind is exact | relative | absolute
TOLERANCES = {
    "sssp": ("exact", 0.0),
    "tc":   ("exact", 0.0),
    "bc":   ("relative", 1e-9),
    "pr":   ("absolute", 1e-6),
}

# Parser nesting guard
MAX_NESTING_DEPTH = 100

PRELUDE_BEGIN = "// ---- prelude begin ----"
PRELUDE_END = "// ---- prelude end ----"

COLOR_ENV_VAR = "GRAPHDSL_COLOR"
