from typing import Dict, NamedTuple

from rbcsort.utils.constants import DEFAULT_DEADLOCK_TIMEOUT


RBCSORT_VERSION = '0.1.0'


class FabricSetting(NamedTuple):
    DEBUG: bool
    DEADLOCK_TIMEOUT: float


class SortSetting(NamedTuple):
    PIVOT_MODE: str
    K1: int
    K2: int
    K3: int
    MAX_REPIVOTS: int
    COMM_MODE: str
    SCHEDULE: str


SINGLE = 'single'
SAMPLE_MEDIAN = 'sample-median'

TAG_SCOPED = 'tag'
CONTEXT_SCOPED = 'ctx'

CASCADED = 'cascaded'
ALTERNATING = 'alternating'
ALL_SCHEDULES = (CASCADED, ALTERNATING)


# Median of max(K1 * log2(p), K2 * n/p, K3) samples, odd-adjusted
SampleMedianSetting = SortSetting(
    PIVOT_MODE=SAMPLE_MEDIAN, K1=1, K2=0, K3=3, MAX_REPIVOTS=3, COMM_MODE=CONTEXT_SCOPED, SCHEDULE=CASCADED,
)
# One uniformly random element per level
SinglePivotSetting = SortSetting(
    PIVOT_MODE=SINGLE, K1=0, K2=0, K3=1, MAX_REPIVOTS=3, COMM_MODE=CONTEXT_SCOPED, SCHEDULE=CASCADED,
)

ALL_SORT_PRESETS: Dict[str, SortSetting] = {
    SAMPLE_MEDIAN: SampleMedianSetting,
    SINGLE: SinglePivotSetting,
}


DEFAULT = 'default'
DEBUG = 'debug'
ALL_FABRIC_PRESETS: Dict[str, FabricSetting] = {
    DEFAULT: FabricSetting(DEBUG=False, DEADLOCK_TIMEOUT=DEFAULT_DEADLOCK_TIMEOUT),
    DEBUG: FabricSetting(DEBUG=True, DEADLOCK_TIMEOUT=DEFAULT_DEADLOCK_TIMEOUT),
}


def get_setting(pivot_mode: str = SAMPLE_MEDIAN) -> SortSetting:
    return ALL_SORT_PRESETS[pivot_mode]


def get_fabric_setting(name: str = DEFAULT) -> FabricSetting:
    return ALL_FABRIC_PRESETS[name]
