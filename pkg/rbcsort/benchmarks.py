"""
Desk-scale benchmarks: communicator splitting, collectives on a sub-range, and sorting.
Every run is checked against a sequential reference before its record is returned.
"""
import logging
import time
from typing import (
    Any,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
)

from rbcsort.exceptions import (
    InvalidArgumentError,
    ValidationError,
)
from rbcsort.runtime.collectives import (
    SUM,
    fold_all,
    ibarrier,
    ibcast,
    iexscan,
    igatherv,
    ireduce,
    iscan,
)
from rbcsort.runtime.comm import (
    Comm,
    CommMode,
    RangeComm,
    create_from_world,
    split_range,
)
from rbcsort.runtime.context import ctx_registry_check
from rbcsort.runtime.groups import (
    ExplicitGroup,
    GroupSpec,
    RangeGroup,
    icomm_create_group,
)
from rbcsort.runtime.p2p import (
    Request,
    wait_for,
    wait_for_all,
)
from rbcsort.runtime.transport import (
    Fabric,
    fabric_create,
)
from rbcsort.runtime.workers import (
    Lockstep,
    Program,
    run_threads,
)
from rbcsort.settings import (
    ALTERNATING,
    FabricSetting,
    SortSetting,
    get_fabric_setting,
)
from rbcsort.sorting.jquick import (
    depth,
    sort,
    sort_program,
)
from rbcsort.sorting.task import LevelRecord
from rbcsort.utils.constants import (
    AMORTIZED_COLLECTIVES,
    CREATE_GROUP_TAG,
    DEFAULT_MICRO_REPS,
    DEFAULT_SORT_REPS,
    KEY_BITS,
    SPLITS_PER_REPETITION,
)
from rbcsort.utils.crypto import (
    derive_rng,
    derive_seed,
)
from rbcsort.utils.records import BenchRecord
from rbcsort.utils.ssz import Words
from rbcsort.utils.validation import (
    validate_bench_size,
    verify_balance,
    verify_level_balance,
    verify_message_bounds,
    verify_multiset,
    verify_sorted,
)

logger = logging.getLogger(__name__)

RANGE = 'range'
GROUP = 'group'
ALL_IMPLS = (RANGE, GROUP)

HALVES = 'halves'
CHAIN = 'chain'
ALL_LAYOUTS = (HALVES, CHAIN)

FULL = 'full'
HALF = 'half'
ALL_SCOPES = (FULL, HALF)

LOCKSTEP = 'lockstep'
THREADS = 'threads'
ALL_DRIVERS = (LOCKSTEP, THREADS)

Bounds = Tuple[int, int]


def halves(p: int) -> List[Bounds]:
    if p == 1:
        return [(0, 0)]
    return [(0, p // 2 - 1), (p // 2, p - 1)]


def chain(p: int) -> List[Bounds]:
    """
    Groups of four ranks where neighbours share their boundary rank: {0-3}, {3-6}, ...
    """
    if p < 4:
        raise InvalidArgumentError(f"The overlapping chain needs at least 4 ranks. Got {p}.")
    return [(first, min(first + 3, p - 1)) for first in range(0, p - 1, 3)]


def layout_groups(layout: str, p: int) -> List[Bounds]:
    if layout == HALVES:
        return halves(p)
    if layout == CHAIN:
        return chain(p)
    raise InvalidArgumentError(f"Unknown layout {layout!r}.")


def creation_order(rank: int, groups: Sequence[Bounds], schedule: str) -> List[int]:
    """
    Indices of the groups `rank` belongs to, in the order it creates them. Under the alternating
    schedule every other boundary rank starts with its right group.
    """
    mine = [index for index, (first, last) in enumerate(groups) if first <= rank <= last]
    if len(mine) == 2 and schedule == ALTERNATING and mine[1] % 2 == 1:
        mine.reverse()
    return mine


def group_spec(impl: str, bounds: Bounds) -> GroupSpec:
    first, last = bounds
    if impl == RANGE:
        return RangeGroup(first=first, last=last)
    if impl == GROUP:
        return ExplicitGroup(ranks=tuple(range(first, last + 1)))
    raise InvalidArgumentError(f"Unknown implementation {impl!r}.")


def create_program(world: Comm, groups: Sequence[Bounds], indices: Sequence[int], impl: str,
                   blocking: bool=True) -> Program[List[Comm]]:
    """
    Create the listed groups. The blocking variant waits for each creation before starting the next.
    """
    if blocking:
        comms = []
        for index in indices:
            comm = yield from wait_for(icomm_create_group(world, group_spec(impl, groups[index]), CREATE_GROUP_TAG))
            comms.append(comm)
        return comms
    requests = [icomm_create_group(world, group_spec(impl, groups[index]), CREATE_GROUP_TAG) for index in indices]
    return (yield from wait_for_all(requests))


def run_lockstep(fabric: Fabric, programs: Dict[int, Program[Any]]) -> Tuple[Dict[int, Any], int]:
    lockstep = Lockstep(fabric)
    try:
        for rank, program in programs.items():
            lockstep.spawn(rank, program)
        results = lockstep.run()
    finally:
        lockstep.close()
    return results, lockstep.rounds


def make_fabric(p: int, fabric_setting: Optional[FabricSetting]) -> Fabric:
    setting = get_fabric_setting() if fabric_setting is None else fabric_setting
    return fabric_create(p, debug=setting.DEBUG, deadlock_timeout=setting.DEADLOCK_TIMEOUT)


def time_range_splits(world: RangeComm, groups: Sequence[Bounds]) -> int:
    start = time.perf_counter_ns()
    for index in range(SPLITS_PER_REPETITION):
        first, last = groups[index % len(groups)]
        split_range(world, first, last)
    return time.perf_counter_ns() - start


def bench_split(p: int, schedule: str, impl: str, layout: str=HALVES, mode: str=CommMode.CONTEXT_SCOPED.value,
                reps: int=DEFAULT_MICRO_REPS, blocking: bool=True,
                fabric_setting: Optional[FabricSetting]=None) -> List[BenchRecord]:
    validate_bench_size(p, 0)
    groups = layout_groups(layout, p)
    records = []
    for repetition in range(reps):
        fabric = make_fabric(p, fabric_setting)
        world = create_from_world(fabric, CommMode(mode))
        programs = {
            rank: create_program(world, groups, creation_order(rank, groups, schedule), impl, blocking)
            for rank in range(p)
        }
        start = time.perf_counter_ns()
        results, rounds = run_lockstep(fabric, programs)
        wall_ns = time.perf_counter_ns() - start
        if impl == RANGE:
            wall_ns = time_range_splits(world, groups)
        comms = [comm for rank in range(p) for comm in results[rank]]
        expected = {(first, last) for first, last in groups}
        if {(min(comm.members), max(comm.members)) for comm in comms} != expected:
            raise ValidationError(f"Split benchmark built {len(comms)} communicators that do not match {groups}.")
        if not ctx_registry_check(comms):
            raise ValidationError('Split benchmark produced two communicators with one context id.')
        records.append(BenchRecord(
            bench=f'split/{layout}/{schedule}',
            p=p,
            n_per_p=0,
            mode=impl if blocking else f'{impl}/nonblocking',
            repetition=repetition,
            wall_ns=wall_ns,
            messages=fabric.messages_sent,
            bytes=fabric.bytes_sent,
            depth=0,
            rounds=rounds,
        ))
        logger.debug('split p=%d %s %s rep %d: %d messages, %d rounds', p, impl, schedule, repetition,
                     fabric.messages_sent, rounds)
    return records


def rank_words(seed: int, repetition: int, rank: int, length: int) -> Words:
    rng = derive_rng(seed, repetition, rank)
    return tuple(rng.getrandbits(KEY_BITS) for _ in range(length))


def start_collective(op: str, comm: Comm, data: Words, n_per_p: int) -> Request:
    if op == 'bcast':
        return ibcast(comm, 0, data if comm.rank() == 0 else None)
    if op == 'reduce':
        return ireduce(comm, 0, data, SUM)
    if op == 'scan':
        return iscan(comm, data, SUM)
    if op == 'exscan':
        return iexscan(comm, data, SUM, identity=[0] * n_per_p)
    if op == 'gatherv':
        counts = [n_per_p] * comm.size if comm.rank() == 0 else None
        return igatherv(comm, 0, data, counts)
    if op == 'barrier':
        return ibarrier(comm)
    raise InvalidArgumentError(f"Unknown collective {op!r}.")


def collective_oracle(op: str, inputs: Sequence[Words], local: int, n_per_p: int) -> Optional[Words]:
    """
    Sequential reference result of `op` at local rank `local`.
    """
    if op == 'bcast':
        return inputs[0]
    if op == 'reduce':
        return fold_all(SUM, inputs) if local == 0 else None
    if op == 'scan':
        return fold_all(SUM, inputs[:local + 1])
    if op == 'exscan':
        return fold_all(SUM, [tuple([0] * n_per_p)] + list(inputs[:local]))
    if op == 'gatherv':
        return tuple(word for vector in inputs for word in vector) if local == 0 else None
    if op == 'barrier':
        return None
    raise InvalidArgumentError(f"Unknown collective {op!r}.")


ALL_COLLECTIVES = ('bcast', 'reduce', 'scan', 'exscan', 'gatherv', 'barrier')


def collective_program(world: RangeComm, bounds: Bounds, scope: str, impl: str, op: str, count: int,
                       data: Words, n_per_p: int) -> Program[List[Any]]:
    if scope == FULL:
        comm: Comm = world
    else:
        comm = yield from wait_for(icomm_create_group(world, group_spec(impl, bounds), CREATE_GROUP_TAG))
    results = []
    for _ in range(count):
        result = yield from wait_for(start_collective(op, comm, data, n_per_p))
        results.append(result)
    return results


def bench_collective(p: int, op: str, n_per_p: int, scope: str=HALF, impl: str=RANGE,
                     mode: str=CommMode.CONTEXT_SCOPED.value, reps: int=DEFAULT_MICRO_REPS, seed: int=0,
                     fabric_setting: Optional[FabricSetting]=None) -> List[BenchRecord]:
    """
    One run with a single collective and one with AMORTIZED_COLLECTIVES of them, each
    including the communicator creation when the scope is half of the ranks.
    """
    validate_bench_size(p, n_per_p)
    if op not in ALL_COLLECTIVES:
        raise InvalidArgumentError(f"Unknown collective {op!r}.")
    if scope not in ALL_SCOPES:
        raise InvalidArgumentError(f"Unknown scope {scope!r}.")
    members = p if scope == FULL else max(1, p // 2)
    bounds = (0, members - 1)
    records = []
    for count in (1, AMORTIZED_COLLECTIVES):
        for repetition in range(reps):
            fabric = make_fabric(p, fabric_setting)
            world = create_from_world(fabric, CommMode(mode))
            inputs = [rank_words(seed, repetition, rank, n_per_p) for rank in range(p)]
            programs = {
                rank: collective_program(world, bounds, scope, impl, op, count, inputs[rank], n_per_p)
                for rank in range(members)
            }
            start = time.perf_counter_ns()
            results, rounds = run_lockstep(fabric, programs)
            wall_ns = time.perf_counter_ns() - start
            for rank in range(members):
                expected = collective_oracle(op, inputs[:members], rank, n_per_p)
                if any(result != expected for result in results[rank]):
                    raise ValidationError(
                        f"{op} on {members} of {p} ranks: rank {rank} got {results[rank][0]}, expected {expected}."
                    )
            records.append(BenchRecord(
                bench=f'collective/{op}/{scope}/{count}',
                p=p,
                n_per_p=n_per_p,
                mode=impl,
                repetition=repetition,
                wall_ns=wall_ns,
                messages=fabric.messages_sent,
                bytes=fabric.bytes_sent,
                depth=0,
                rounds=rounds,
            ))
    return records


def sort_inputs(seed: int, repetition: int, p: int, n_per_p: int) -> List[List[int]]:
    return [list(rank_words(seed, repetition, rank, n_per_p)) for rank in range(p)]


def run_sort(fabric: Fabric, world: RangeComm, inputs: Sequence[Sequence[int]], setting: SortSetting, seed: int,
             driver: str) -> Tuple[List[List[int]], List[LevelRecord], int]:
    traces: List[List[LevelRecord]] = [[] for _ in inputs]
    rounds = 0
    if driver == LOCKSTEP:
        programs = {
            rank: sort_program(world, inputs[rank], setting, seed, traces[rank]) for rank in range(len(inputs))
        }
        results, rounds = run_lockstep(fabric, programs)
        outputs = [results[rank] for rank in range(len(inputs))]
    elif driver == THREADS:
        def target(rank: int) -> List[int]:
            return sort(world, inputs[rank], setting, seed, traces[rank])
        outputs = run_threads(fabric, target)
    else:
        raise InvalidArgumentError(f"Unknown driver {driver!r}.")
    return outputs, [record for trace in traces for record in trace], rounds


def verify_sort(inputs: Sequence[Sequence[int]], outputs: Sequence[Sequence[int]],
                trace: Sequence[LevelRecord]) -> None:
    failures = []
    if not verify_sorted(outputs):
        failures.append('output is not globally sorted')
    if not verify_multiset(inputs, outputs):
        failures.append('output is not a permutation of the input')
    if not verify_balance(outputs):
        failures.append(f"output sizes {[len(output) for output in outputs]} are unbalanced")
    if not verify_level_balance(trace):
        failures.append(f"unbalanced levels: {[record for record in trace if not record.balanced]}")
    if not verify_message_bounds(trace):
        failures.append('a level exceeded its data message bounds')
    if failures:
        raise ValidationError('Sort verification failed: ' + '; '.join(failures) + '.')


def bench_sort(p: int, n_per_p: int, setting: SortSetting, reps: int=DEFAULT_SORT_REPS, seed: int=0,
               driver: str=LOCKSTEP, fabric_setting: Optional[FabricSetting]=None) -> List[BenchRecord]:
    validate_bench_size(p, n_per_p)
    records = []
    for repetition in range(reps):
        fabric = make_fabric(p, fabric_setting)
        world = create_from_world(fabric, CommMode(setting.COMM_MODE))
        inputs = sort_inputs(seed, repetition, p, n_per_p)
        start = time.perf_counter_ns()
        outputs, trace, rounds = run_sort(fabric, world, inputs, setting, derive_seed(seed, repetition), driver)
        wall_ns = time.perf_counter_ns() - start
        verify_sort(inputs, outputs, trace)
        records.append(BenchRecord(
            bench=f'sort/{setting.PIVOT_MODE}',
            p=p,
            n_per_p=n_per_p,
            mode=f'{setting.COMM_MODE}/{setting.SCHEDULE}',
            repetition=repetition,
            wall_ns=wall_ns,
            messages=fabric.messages_sent,
            bytes=fabric.bytes_sent,
            depth=depth(trace),
            rounds=rounds,
        ))
        logger.debug('sort p=%d n/p=%d rep %d: depth %d, %d messages', p, n_per_p, repetition,
                     depth(trace), fabric.messages_sent)
    return records
