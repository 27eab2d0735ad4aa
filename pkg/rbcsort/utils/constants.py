# Matching
ANY_SOURCE = -1

# Reserved collective tag band [2**20, 2**20 + 63]
RESERVED_TAG_BASE = 2 ** 20
RESERVED_TAG_COUNT = 64

# Blocking collectives
BCAST_TAG = RESERVED_TAG_BASE
REDUCE_TAG = RESERVED_TAG_BASE + 1
SCAN_TAG = RESERVED_TAG_BASE + 2
EXSCAN_TAG = RESERVED_TAG_BASE + 3
GATHER_TAG = RESERVED_TAG_BASE + 4
GATHERV_TAG = RESERVED_TAG_BASE + 5
BARRIER_UP_TAG = RESERVED_TAG_BASE + 6
BARRIER_DOWN_TAG = RESERVED_TAG_BASE + 7

# Nonblocking collectives, used when the caller passes no tag
IBCAST_TAG = RESERVED_TAG_BASE + 8
IREDUCE_TAG = RESERVED_TAG_BASE + 9
ISCAN_TAG = RESERVED_TAG_BASE + 10
IEXSCAN_TAG = RESERVED_TAG_BASE + 11
IGATHER_TAG = RESERVED_TAG_BASE + 12
IGATHERV_TAG = RESERVED_TAG_BASE + 13
IBARRIER_UP_TAG = RESERVED_TAG_BASE + 14
IBARRIER_DOWN_TAG = RESERVED_TAG_BASE + 15

MAX_WORD = 2 ** 64 - 1
SCHEDULE_DIGEST_LENGTH = 8

# Fabric
DEFAULT_DEADLOCK_TIMEOUT = 30.0
DEFAULT_MAX_ROUNDS = 1_000_000

# Sorting tags: one block of SORT_TAGS_PER_LEVEL tags per recursion level
SORT_TAG_BASE = 2 ** 10
SORT_TAGS_PER_LEVEL = 16
PIVOT_GATHER_OFFSET = 0
PIVOT_BCAST_OFFSET = 1
COUNTS_SCAN_OFFSET = 2
COUNTS_BCAST_OFFSET = 3
SMALL_OFFSET = 4
LARGE_OFFSET = 5
MEDIAN_GATHER_OFFSET = 6
MEDIAN_BCAST_OFFSET = 7
PRELUDE_SCAN_TAG = 16
PRELUDE_BCAST_TAG = 17
PRELUDE_MOVE_TAG = 18
BASE_CASE_TAG = 19
CREATE_GROUP_TAG = 20

# Benchmarks
DEFAULT_MICRO_REPS = 5
DEFAULT_SORT_REPS = 3
SPLITS_PER_REPETITION = 10_000
AMORTIZED_COLLECTIVES = 50
KEY_BITS = 32
BENCH_CSV_HEADER = (
    'bench', 'p', 'n_per_p', 'mode', 'repetition', 'wall_ns', 'messages', 'bytes', 'depth', 'rounds',
)
