import logging
import operator
from typing import (
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

from eth_utils import to_tuple
from eth_utils.toolz import accumulate

from rbcsort.exceptions import ProtocolError
from rbcsort.runtime.collectives import (
    SUM,
    ibcast,
    iexscan,
)
from rbcsort.runtime.p2p import wait_for
from rbcsort.runtime.workers import Program
from rbcsort.sorting.capacity import (
    Capacity,
    SlotRange,
    janus_of,
)
from rbcsort.sorting.task import (
    Side,
    SortTask,
)
from rbcsort.utils.constants import (
    COUNTS_BCAST_OFFSET,
    COUNTS_SCAN_OFFSET,
)

logger = logging.getLogger(__name__)


class PartitionCounts(NamedTuple):
    s_local: int
    g_local: int
    s_prefix: int
    g_prefix: int
    s_total: int
    g_total: int


def exclusive_prefix(values: Sequence[int]) -> Tuple[int, ...]:
    return tuple(accumulate(operator.add, values, 0))[:-1]


def large_prefix(slots: SlotRange, rank: int, s_prefix: int) -> int:
    """
    Large elements on ranks before `rank`: l_i = offset_i - s_i.
    """
    return slots.offset(rank) - s_prefix


def compute_counts(task: SortTask, s_local: int, g_local: int) -> Program[PartitionCounts]:
    """
    Exclusive prefix sums of (small, large) counts; the last rank broadcasts the totals.
    """
    comm = task.comm
    last = comm.size - 1
    prefix = yield from wait_for(iexscan(
        comm, [s_local, g_local], SUM, identity=[0, 0], tag=task.tag(COUNTS_SCAN_OFFSET),
    ))
    buffer = [prefix[0] + s_local, prefix[1] + g_local] if task.local_rank == last else None
    totals = yield from wait_for(ibcast(comm, last, buffer, tag=task.tag(COUNTS_BCAST_OFFSET)))
    counts = PartitionCounts(
        s_local=s_local,
        g_local=g_local,
        s_prefix=prefix[0],
        g_prefix=prefix[1],
        s_total=totals[0],
        g_total=totals[1],
    )
    if s_local + g_local != task.share:
        raise ProtocolError(f"Rank {task.rank} partitioned {s_local + g_local} of {task.share} elements.")
    if counts.s_total + counts.g_total != task.slots.total:
        raise ProtocolError(
            f"Group totals {counts.s_total} + {counts.g_total} do not add up to {task.slots.total} slots."
        )
    if counts.g_prefix != large_prefix(task.slots, task.rank, counts.s_prefix):
        raise ProtocolError(
            f"Rank {task.rank} has large prefix {counts.g_prefix}, expected "
            f"{large_prefix(task.slots, task.rank, counts.s_prefix)}."
        )
    return counts


class Janus(NamedTuple):
    rank: int
    small: int
    large: int


class Split(NamedTuple):
    left: SlotRange
    right: SlotRange
    janus: Optional[Janus]

    @property
    def r_left(self) -> int:
        return self.left.r

    @property
    def r_right(self) -> int:
        return self.right.r

    def child(self, side: Side) -> SlotRange:
        return self.left if side is Side.SMALL else self.right


def split_groups(slots: SlotRange, s_total: int) -> Split:
    """
    The left group takes the first s_total slots, the right group the rest. A rank whose slots
    straddle the boundary is the janus and belongs to both groups.
    """
    left, right = slots.split(s_total)
    rank = janus_of(left, right)
    janus = None
    if rank is not None:
        janus = Janus(rank=rank, small=left.share(rank), large=right.share(rank))
    return Split(left=left, right=right, janus=janus)


class Route(NamedTuple):
    """
    `length` elements of one side, starting at `index` in the source's side list,
    destined for output slots [slot, slot + length) on `target`.
    """
    target: int
    side: Side
    index: int
    slot: int
    length: int


class Assignment(NamedTuple):
    out: Tuple[Route, ...]
    expected_small: int
    expected_large: int

    @property
    def expected_in(self) -> int:
        return self.expected_small + self.expected_large

    def posted(self, side: Side, me: int) -> int:
        return sum(1 for route in self.out if route.side is side and route.target != me)


class Span(NamedTuple):
    target: int
    index: int
    slot: int
    length: int


@to_tuple
def cut_span(capacity: Capacity, slot: int, length: int) -> Iterable[Span]:
    """
    Cut the slot span [slot, slot + length) at rank boundaries.
    """
    index = 0
    while index < length:
        target = capacity.owner(slot + index)
        stop = min(length, capacity.prefix(target) + capacity.of(target) - slot)
        yield Span(target=target, index=index, slot=slot + index, length=stop - index)
        index = stop


@to_tuple
def routes_for_span(capacity: Capacity, side: Side, slot: int, length: int) -> Iterable[Route]:
    for span in cut_span(capacity, slot, length):
        yield Route(target=span.target, side=side, index=span.index, slot=span.slot, length=span.length)


def greedy_assignment(slots: SlotRange, counts: PartitionCounts, split: Split, rank: int) -> Assignment:
    """
    Sources fill targets in rank order: the k-th small element of rank i lands in slot
    base + s_i + k, the k-th large one in slot base + s_total + l_i + k.
    """
    capacity = slots.capacity
    routes: List[Route] = []
    if counts.s_local:
        routes.extend(routes_for_span(capacity, Side.SMALL, slots.base + counts.s_prefix, counts.s_local))
    if counts.g_local:
        start = slots.base + counts.s_total + counts.g_prefix
        routes.extend(routes_for_span(capacity, Side.LARGE, start, counts.g_local))
    for route in routes:
        child = split.child(route.side)
        if not (child.base <= route.slot and route.slot + route.length <= child.end):
            raise ProtocolError(f"Route {route} leaves its group's slots [{child.base}, {child.end}).")
    logger.debug('Rank %d routes %d small and %d large elements in %d messages',
                 rank, counts.s_local, counts.g_local, len(routes))
    return Assignment(
        out=tuple(routes),
        expected_small=split.left.share(rank),
        expected_large=split.right.share(rank),
    )
