"""
Janus Quicksort over range communicators.

Every rank owns a fixed range of output slots. A task is a contiguous slot range; it is
partitioned around a pivot, the small elements move to the task's first slots and the large
ones to the rest. A rank whose slots straddle that boundary (the janus) works on both
child tasks at once. Tasks of one or two ranks wait for the second phase.
"""
import logging
from typing import (
    Dict,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

from rbcsort.exceptions import (
    InvalidArgumentError,
    ProtocolError,
)
from rbcsort.runtime.collectives import (
    SUM,
    ibcast,
    iexscan,
)
from rbcsort.runtime.comm import (
    RangeComm,
    split_range,
)
from rbcsort.runtime.p2p import (
    Request,
    post_recv,
    post_send,
    wait_for,
)
from rbcsort.runtime.transport import Endpoint
from rbcsort.runtime.workers import (
    Park,
    Program,
    drive,
)
from rbcsort.settings import (
    ALTERNATING,
    SortSetting,
    get_setting,
)
from rbcsort.sorting.assignment import (
    Assignment,
    Split,
    compute_counts,
    cut_span,
    greedy_assignment,
    split_groups,
)
from rbcsort.sorting.base_case import base_case
from rbcsort.sorting.capacity import (
    Capacity,
    SlotRange,
)
from rbcsort.sorting.partition import partition_local
from rbcsort.sorting.pivot import select_pivot
from rbcsort.sorting.task import (
    LevelRecord,
    Side,
    SortTask,
)
from rbcsort.utils.constants import (
    ANY_SOURCE,
    LARGE_OFFSET,
    MAX_WORD,
    PRELUDE_BCAST_TAG,
    PRELUDE_MOVE_TAG,
    PRELUDE_SCAN_TAG,
    SMALL_OFFSET,
)
from rbcsort.utils.ssz import (
    Element,
    decode_chunk,
    encode_chunk,
)

logger = logging.getLogger(__name__)


class SlotBuffer:
    """
    Receive area for the slots [start, start + size) of one rank.
    """
    def __init__(self, start: int, size: int) -> None:
        self.start = start
        self.size = size
        self.filled = 0
        self._slots: List[Optional[Element]] = [None] * size

    @property
    def full(self) -> bool:
        return self.filled == self.size

    def place(self, slot: int, elements: Sequence[Element]) -> None:
        position = slot - self.start
        if position < 0 or position + len(elements) > self.size:
            raise ProtocolError(
                f"Chunk for slots [{slot}, {slot + len(elements)}) overflows [{self.start}, {self.start + self.size})."
            )
        for index, element in enumerate(elements, start=position):
            if self._slots[index] is not None:
                raise ProtocolError(f"Slot {self.start + index} was filled twice.")
            self._slots[index] = element
        self.filled += len(elements)

    @property
    def elements(self) -> List[Element]:
        if not self.full:
            raise ProtocolError(f"Only {self.filled} of {self.size} slots were filled.")
        return list(self._slots)


def receive_chunks(comm: RangeComm, buffers: Dict[int, SlotBuffer]) -> Program[int]:
    """
    Receive chunks from any member, one tag per buffer, until every buffer is full.
    Returns the number of messages received.
    """
    endpoint = comm.endpoint()
    requests: Dict[int, Request] = {
        tag: post_recv(comm, ANY_SOURCE, tag) for tag, buffer in buffers.items() if not buffer.full
    }
    messages = 0
    while requests:
        version = endpoint.mailbox_version()
        activity = endpoint.activity
        for tag, request in list(requests.items()):
            if not request.test():
                continue
            messages += 1
            slot, elements = decode_chunk(request.result)
            buffers[tag].place(slot, elements)
            if buffers[tag].full:
                del requests[tag]
            else:
                requests[tag] = post_recv(comm, ANY_SOURCE, tag)
        if requests and endpoint.activity == activity:
            yield Park(version)
    return messages


class ExchangeResult(NamedTuple):
    small: List[Element]
    large: List[Element]
    messages_in: int


def exchange(task: SortTask, split: Split, assignment: Assignment,
             small: List[Element], large: List[Element]) -> Program[ExchangeResult]:
    """
    Post every outgoing chunk, then receive until this rank's slots in both children are filled.
    Chunks to the rank itself are moved locally.
    """
    sides = {Side.SMALL: small, Side.LARGE: large}
    tags = {Side.SMALL: task.tag(SMALL_OFFSET), Side.LARGE: task.tag(LARGE_OFFSET)}
    expected = {Side.SMALL: assignment.expected_small, Side.LARGE: assignment.expected_large}
    buffers = {
        tags[side]: SlotBuffer(split.child(side).start(task.rank), expected[side]) for side in Side
    }
    for route in assignment.out:
        chunk = sides[route.side][route.index:route.index + route.length]
        if route.target == task.rank:
            buffers[tags[route.side]].place(route.slot, chunk)
        else:
            post_send(task.comm, route.target - task.slots.first, tags[route.side], encode_chunk(route.slot, chunk))
    messages_in = yield from receive_chunks(task.comm, buffers)
    return ExchangeResult(
        small=buffers[tags[Side.SMALL]].elements,
        large=buffers[tags[Side.LARGE]].elements,
        messages_in=messages_in,
    )


class TaskScheduler:
    """
    Round-robin over the tasks one rank works on. The rank parks only after a full pass
    in which no task made progress.
    """
    def __init__(self, endpoint: Endpoint) -> None:
        self.endpoint = endpoint
        self.tasks: List[Program[None]] = []
        self.spawned = 0

    def spawn(self, task: Program[None]) -> None:
        self.tasks.append(task)
        self.spawned += 1

    def run(self) -> Program[None]:
        endpoint = self.endpoint
        while self.tasks:
            version = endpoint.mailbox_version()
            activity = endpoint.activity
            spawned = self.spawned
            finished = False
            for task in list(self.tasks):
                try:
                    next(task)
                except StopIteration:
                    self.tasks.remove(task)
                    finished = True
            if not finished and spawned == self.spawned and endpoint.activity == activity:
                yield Park(version)


class BaseJob(NamedTuple):
    comm: RangeComm
    slots: SlotRange
    elems: List[Element]


class RankSorter:
    def __init__(self, endpoint: Endpoint, rank: int, setting: SortSetting, seed: int,
                 trace: Optional[List[LevelRecord]]=None) -> None:
        self.rank = rank
        self.setting = setting
        self.seed = seed
        self.trace = trace
        self.scheduler = TaskScheduler(endpoint)
        self.base_jobs: List[BaseJob] = []
        self.pieces: List[Tuple[int, List[Element]]] = []

    def run(self, comm: RangeComm, slots: SlotRange, elems: List[Element]) -> Program[List[Element]]:
        self._adopt(comm, slots, 0, elems)
        yield from self.scheduler.run()
        # Second phase: base cases, after every distributed level of this rank
        for job in self.base_jobs:
            self.scheduler.spawn(self._base(job))
        yield from self.scheduler.run()
        return [element for _, piece in sorted(self.pieces) for element in piece]

    def _adopt(self, comm: RangeComm, slots: SlotRange, level: int, elems: List[Element]) -> None:
        if slots.size >= 3:
            task = SortTask(comm=comm, slots=slots, level=level, rank=self.rank, elems=elems)
            if task.is_first_janus or task.is_last_janus:
                logger.debug('Rank %d is janus of ranks %d-%d at level %d', self.rank, slots.first, slots.last, level)
            self.scheduler.spawn(self._distributed(task))
        else:
            self.base_jobs.append(BaseJob(comm=comm, slots=slots, elems=elems))

    def _distributed(self, task: SortTask) -> Program[None]:
        setting = self.setting
        attempt = 0
        while True:
            pivot = yield from select_pivot(task, setting, self.seed, attempt)
            small, large = partition_local(task.elems, pivot, task.level)
            counts = yield from compute_counts(task, len(small), len(large))
            if 0 < counts.s_total < task.slots.total:
                break
            if attempt >= setting.MAX_REPIVOTS:
                raise ProtocolError(f"The exact median {pivot} did not split level {task.level}.")
            attempt += 1
        split = split_groups(task.slots, counts.s_total)
        assignment = greedy_assignment(task.slots, counts, split, self.rank)
        result = yield from exchange(task, split, assignment, small, large)
        logger.debug('Rank %d finished level %d on ranks %d-%d: %d small of %d, janus %s',
                     self.rank, task.level, task.slots.first, task.slots.last, counts.s_total,
                     task.slots.total, split.janus)
        if self.trace is not None:
            self.trace.append(LevelRecord(
                level=task.level,
                rank=self.rank,
                first=task.slots.first,
                last=task.slots.last,
                base=task.slots.base,
                total=task.slots.total,
                capacity=task.share,
                s_total=counts.s_total,
                pivot_attempts=attempt + 1,
                posted_small=assignment.posted(Side.SMALL, self.rank),
                posted_large=assignment.posted(Side.LARGE, self.rank),
                received_small=len(result.small),
                received_large=len(result.large),
                expected_small=assignment.expected_small,
                expected_large=assignment.expected_large,
                messages_in=result.messages_in,
            ))
        sides = [side for side in Side if split.child(side).share(self.rank) > 0]
        if len(sides) == 2 and self.setting.SCHEDULE == ALTERNATING and self.rank % 2 == 1:
            sides.reverse()
        data = {Side.SMALL: result.small, Side.LARGE: result.large}
        for side in sides:
            child = split.child(side)
            comm = split_range(task.comm, child.first - task.slots.first, child.last - task.slots.first)
            self._adopt(comm, child, task.level + 1, data[side])

    def _base(self, job: BaseJob) -> Program[None]:
        piece = yield from base_case(job.comm, job.slots, self.rank, job.elems)
        self.pieces.append((job.slots.start(self.rank), piece))


def rebalance(comm: RangeComm, capacity: Capacity, offset: int, elems: List[Element]) -> Program[List[Element]]:
    """
    Move every element to the rank owning its input position, so each rank of the root
    group starts with exactly its capacity. Balanced inputs send nothing.
    """
    me = comm.rank()
    mine = capacity.of(me) if me < capacity.p else 0
    start = capacity.prefix(me) if me < capacity.p else 0
    buffer = SlotBuffer(start, mine)
    for span in cut_span(capacity, offset, len(elems)):
        chunk = elems[span.index:span.index + span.length]
        if span.target == me:
            buffer.place(span.slot, chunk)
        else:
            post_send(comm, span.target, PRELUDE_MOVE_TAG, encode_chunk(span.slot, chunk))
    yield from receive_chunks(comm, {PRELUDE_MOVE_TAG: buffer})
    return buffer.elements


def sort_program(comm: RangeComm, keys: Sequence[int], setting: Optional[SortSetting]=None, seed: int=0,
                 trace: Optional[List[LevelRecord]]=None) -> Program[List[int]]:
    """
    Collective sort of every member's keys. Afterwards the keys are globally sorted by rank and
    rank i holds ceil(n/p) keys for i < n mod p and floor(n/p) keys otherwise.
    """
    setting = get_setting()._replace(COMM_MODE=comm.mode.value) if setting is None else setting
    if setting.COMM_MODE != comm.mode.value:
        raise InvalidArgumentError(
            f"The sort setting asks for {setting.COMM_MODE}-scoped communicators, the root is {comm.mode.value}-scoped."
        )
    for key in keys:
        if not 0 <= key <= MAX_WORD:
            raise InvalidArgumentError(f"Keys should be unsigned 64-bit integers. Got {key}.")
    me = comm.rank()
    last = comm.size - 1
    prefix = yield from wait_for(iexscan(comm, [len(keys)], SUM, identity=[0], tag=PRELUDE_SCAN_TAG))
    offset = prefix[0]
    buffer = [offset + len(keys)] if me == last else None
    n = (yield from wait_for(ibcast(comm, last, buffer, tag=PRELUDE_BCAST_TAG)))[0]
    if n == 0:
        return []
    capacity = Capacity.for_input(n, comm.size)
    # Ties are broken by input position so that all elements are distinct
    elems = [(key, offset + index) for index, key in enumerate(keys)]
    mine = yield from rebalance(comm, capacity, offset, elems)
    if me >= capacity.p:
        return []
    root = split_range(comm, 0, capacity.p - 1)
    sorter = RankSorter(comm.endpoint(), me, setting, seed, trace)
    result = yield from sorter.run(root, SlotRange(capacity, 0, n), mine)
    return [key for key, _ in result]


def sort(comm: RangeComm, keys: Sequence[int], setting: Optional[SortSetting]=None, seed: int=0,
         trace: Optional[List[LevelRecord]]=None) -> List[int]:
    return drive(sort_program(comm, keys, setting, seed, trace), comm.endpoint())


def depth(trace: Sequence[LevelRecord]) -> int:
    """
    Number of distributed levels recorded.
    """
    return max((record.level for record in trace), default=-1) + 1
