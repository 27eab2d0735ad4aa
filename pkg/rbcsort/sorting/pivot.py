import bisect
import logging
import random
from typing import (
    List,
    Sequence,
)

from rbcsort.exceptions import InvalidArgumentError
from rbcsort.runtime.collectives import (
    ibcast,
    igatherv,
)
from rbcsort.runtime.p2p import wait_for
from rbcsort.runtime.workers import Program
from rbcsort.settings import (
    SAMPLE_MEDIAN,
    SINGLE,
    SortSetting,
)
from rbcsort.sorting.capacity import SlotRange
from rbcsort.sorting.task import SortTask
from rbcsort.utils.constants import (
    MEDIAN_BCAST_OFFSET,
    MEDIAN_GATHER_OFFSET,
    PIVOT_BCAST_OFFSET,
    PIVOT_GATHER_OFFSET,
)
from rbcsort.utils.crypto import derive_rng
from rbcsort.utils.ssz import (
    Element,
    Words,
)

logger = logging.getLogger(__name__)


def ceil_log2(value: int) -> int:
    return (value - 1).bit_length() if value > 1 else 0


def sample_count(setting: SortSetting, size: int, load: int, total: int) -> int:
    """
    max(K1 * log2(size), K2 * load, K3), made odd and capped by the number of elements.
    """
    count = max(setting.K1 * ceil_log2(size), setting.K2 * load, setting.K3, 1)
    if count % 2 == 0:
        count += 1
    limit = total if total % 2 else total - 1
    return max(1, min(count, limit))


def pivot_rng(seed: int, slots: SlotRange, level: int, attempt: int) -> random.Random:
    return derive_rng(seed, slots.base, slots.total, level, attempt)


def sample_indices(setting: SortSetting, slots: SlotRange, rng: random.Random) -> List[int]:
    """
    Positions within the task's slot range whose elements are drawn as pivot candidates.
    Every member computes the same list from the shared seed.
    """
    if setting.PIVOT_MODE == SINGLE:
        return [rng.randrange(slots.total)]
    if setting.PIVOT_MODE == SAMPLE_MEDIAN:
        count = sample_count(setting, slots.size, slots.capacity.load, slots.total)
        return sorted(rng.sample(range(slots.total), count))
    raise InvalidArgumentError(f"Unknown pivot mode {setting.PIVOT_MODE!r}.")


def flatten(elements: Sequence[Element]) -> Words:
    return tuple(word for element in elements for word in element)


def pairs(words: Sequence[int]) -> List[Element]:
    return list(zip(words[0::2], words[1::2]))


def counts_by_rank(slots: SlotRange, indices: Sequence[int]) -> List[int]:
    counts = []
    for rank in slots.ranks:
        start = slots.offset(rank)
        stop = start + slots.share(rank)
        counts.append(bisect.bisect_left(indices, stop) - bisect.bisect_left(indices, start))
    return counts


def select_pivot(task: SortTask, setting: SortSetting, seed: int, attempt: int=0) -> Program[Element]:
    """
    Pick a pivot element every member of the task agrees on. After MAX_REPIVOTS degenerate
    attempts the exact median of the whole group is used.
    """
    if attempt >= setting.MAX_REPIVOTS:
        return (yield from exact_median(task))
    comm = task.comm
    slots = task.slots
    rng = pivot_rng(seed, slots, task.level, attempt)
    indices = sample_indices(setting, slots, rng)
    start = slots.offset(task.rank)
    mine = [task.elems[index - start] for index in indices if start <= index < start + task.share]
    if setting.PIVOT_MODE == SINGLE:
        owner = slots.capacity.owner(slots.base + indices[0]) - slots.first
        buffer = flatten(mine) if task.local_rank == owner else None
        words = yield from wait_for(ibcast(comm, owner, buffer, tag=task.tag(PIVOT_BCAST_OFFSET)))
        return (words[0], words[1])
    counts = None
    if task.local_rank == 0:
        counts = [2 * count for count in counts_by_rank(slots, indices)]
    gathered = yield from wait_for(igatherv(
        comm, 0, flatten(mine), counts, tag=task.tag(PIVOT_GATHER_OFFSET),
    ))
    buffer = None
    if task.local_rank == 0:
        samples = sorted(pairs(gathered))
        buffer = samples[len(samples) // 2]
        logger.debug('Level %d pivot %s is the median of %d samples', task.level, buffer, len(samples))
    words = yield from wait_for(ibcast(comm, 0, buffer, tag=task.tag(PIVOT_BCAST_OFFSET)))
    return (words[0], words[1])


def exact_median(task: SortTask) -> Program[Element]:
    comm = task.comm
    counts = None
    if task.local_rank == 0:
        counts = [2 * task.slots.share(rank) for rank in task.slots.ranks]
    gathered = yield from wait_for(igatherv(
        comm, 0, flatten(task.elems), counts, tag=task.tag(MEDIAN_GATHER_OFFSET),
    ))
    buffer = None
    if task.local_rank == 0:
        everything = sorted(pairs(gathered))
        buffer = everything[len(everything) // 2]
    words = yield from wait_for(ibcast(comm, 0, buffer, tag=task.tag(MEDIAN_BCAST_OFFSET)))
    return (words[0], words[1])
