import random

import pytest

from rbcsort.benchmarks import run_lockstep
from rbcsort.exceptions import (
    InvalidArgumentError,
    ScheduleMismatchError,
    TagConflictError,
    TruncationError,
)
from rbcsort.runtime.collectives import (
    SUM,
    ReduceOp,
    barrier,
    bcast,
    exscan,
    fold_all,
    gatherv,
    ibarrier,
    ibcast,
    iexscan,
    igatherv,
    ireduce,
    iscan,
    reduce,
    scan,
    tree_children,
    tree_parent,
    tree_rounds,
)
from rbcsort.runtime.comm import (
    CommMode,
    create_from_world,
    split_range,
)
from rbcsort.runtime.p2p import (
    wait,
    wait_for,
    wait_for_all,
)
from rbcsort.runtime.transport import fabric_create
from rbcsort.runtime.workers import (
    Lockstep,
    as_rank,
    run_threads,
)

MODULUS = 2 ** 31 - 1


def compose(left, right):
    # Affine maps x -> m * x + c as (m, c); apply left first
    return ((left[0] * right[0]) % MODULUS, (left[1] * right[0] + right[1]) % MODULUS)


AFFINE = ReduceOp(compose, commutative=False, name='affine')


@pytest.mark.parametrize(
    'vrank, size, children, parent',
    [
        (0, 8, (1, 2, 4), 0),
        (4, 8, (5, 6), 0),
        (6, 8, (7,), 4),
        (3, 8, (), 2),
        (0, 5, (1, 2, 4), 0),
        (2, 3, (), 0),
        (0, 1, (), 0),
    ]
)
def test_binomial_tree(vrank, size, children, parent):
    assert tree_children(vrank, size) == children
    assert tree_parent(vrank) == parent


@pytest.mark.parametrize('size, rounds', [(1, 0), (2, 1), (3, 2), (8, 3), (9, 4), (33, 6)])
def test_tree_rounds(size, rounds):
    assert tree_rounds(size) == rounds


def test_reduce_op_checks_lengths():
    with pytest.raises(InvalidArgumentError):
        SUM((1,), (1, 2))
    assert SUM((1, 2), (3, 4)) == (4, 6)


def make_inputs(p, length):
    rng = random.Random(p * 100 + length)
    return [tuple(rng.getrandbits(32) for _ in range(length)) for _ in range(p)]


def gatherv_input(inputs, rank, length):
    return inputs[rank][:(rank * 7) % (length + 1)]


def start(op, comm, root, inputs, length):
    local = comm.rank()
    data = inputs[local]
    if op == 'bcast':
        return ibcast(comm, root, data if local == root else None)
    if op == 'reduce':
        return ireduce(comm, root, data, SUM)
    if op == 'scan':
        return iscan(comm, data, SUM)
    if op == 'exscan':
        return iexscan(comm, data, SUM, identity=[0] * length)
    if op == 'gatherv':
        counts = [len(gatherv_input(inputs, rank, length)) for rank in range(comm.size)]
        return igatherv(comm, root, gatherv_input(inputs, local, length), counts if local == root else None)
    return ibarrier(comm)


def oracle(op, inputs, root, local, length):
    if op == 'bcast':
        return inputs[root]
    if op == 'reduce':
        return fold_all(SUM, inputs) if local == root else None
    if op == 'scan':
        return fold_all(SUM, inputs[:local + 1])
    if op == 'exscan':
        return fold_all(SUM, inputs[:local]) if local else tuple([0] * length)
    if op == 'gatherv':
        if local != root:
            return None
        return tuple(word for rank in range(len(inputs)) for word in gatherv_input(inputs, rank, length))
    return None


def collective_program(op, comm, root, inputs, length):
    request = start(op, comm, root, inputs, length)
    result = yield from wait_for(request)
    return result, request.transitions, request.total_rounds


@pytest.mark.parametrize('op', ['bcast', 'reduce', 'scan', 'exscan', 'gatherv', 'barrier'])
@pytest.mark.parametrize('length', [0, 1, 17])
@pytest.mark.parametrize('p', range(1, 34))
def test_collectives_match_oracle(op, length, p):
    fabric = fabric_create(p)
    world = create_from_world(fabric)
    root = p // 3
    inputs = make_inputs(p, length)
    programs = {rank: collective_program(op, world, root, inputs, length) for rank in range(p)}
    results, _ = run_lockstep(fabric, programs)
    for rank in range(p):
        result, transitions, total_rounds = results[rank]
        assert result == oracle(op, inputs, root, rank, length)
        assert total_rounds == tree_rounds(p)
        if op == 'barrier':
            assert transitions <= 2 * total_rounds + 2
        else:
            assert transitions <= total_rounds + 2
    if op in ('bcast', 'reduce', 'gatherv'):
        assert fabric.messages_sent == p - 1
    elif op == 'barrier':
        assert fabric.messages_sent == 2 * (p - 1)
    else:
        assert fabric.messages_sent <= 2 * (p - 1)
    assert fabric.messages_pending == 0


@pytest.mark.parametrize('p', [2, 3, 4, 7, 8, 13])
@pytest.mark.parametrize('root', [0, 1])
def test_non_commutative_reduce_and_scan_keep_rank_order(p, root):
    fabric = fabric_create(p)
    world = create_from_world(fabric)
    rng = random.Random(p)
    maps = [(rng.randrange(1, MODULUS), rng.randrange(MODULUS)) for _ in range(p)]

    def program():
        local = world.rank()
        reduced = yield from wait_for(ireduce(world, root, maps[local], AFFINE))
        prefix = yield from wait_for(iscan(world, maps[local], AFFINE))
        return reduced, prefix

    results, _ = run_lockstep(fabric, {rank: program() for rank in range(p)})
    assert results[root][0] == fold_all(AFFINE, maps)
    for rank in range(p):
        assert results[rank][1] == fold_all(AFFINE, maps[:rank + 1])


def test_scan_examples():
    fabric = fabric_create(4)
    world = create_from_world(fabric)

    def program():
        value = [world.rank() + 1]
        inclusive = yield from wait_for(iscan(world, value, SUM))
        exclusive = yield from wait_for(iexscan(world, value, SUM, identity=[0]))
        pairs = yield from wait_for(iexscan(world, [world.rank(), 10 * world.rank()], SUM, identity=[0, 0]))
        return inclusive[0], exclusive[0], pairs

    results, _ = run_lockstep(fabric, {rank: program() for rank in range(4)})
    assert [results[rank][0] for rank in range(4)] == [1, 3, 6, 10]
    assert [results[rank][1] for rank in range(4)] == [0, 1, 3, 6]
    assert [results[rank][2] for rank in range(4)] == [(0, 0), (0, 0), (1, 10), (3, 30)]


def test_gatherv_example():
    fabric = fabric_create(4)
    world = create_from_world(fabric)
    buffers = [(10,), (20, 21), (), (30, 31, 32)]

    def program():
        local = world.rank()
        counts = [1, 2, 0, 3] if local == 0 else None
        return (yield from wait_for(igatherv(world, 0, buffers[local], counts)))

    results, _ = run_lockstep(fabric, {rank: program() for rank in range(4)})
    assert results[0] == (10, 20, 21, 30, 31, 32)
    assert results[1] is None


def test_argument_errors():
    world = create_from_world(fabric_create(4))
    with as_rank(0):
        with pytest.raises(InvalidArgumentError):
            ibcast(world, 0, None)
        with pytest.raises(InvalidArgumentError):
            ibcast(world, 4, [1])
        with pytest.raises(InvalidArgumentError):
            iexscan(world, [1], SUM)
        with pytest.raises(InvalidArgumentError):
            igatherv(world, 0, [1], [1, 1])
        with pytest.raises(InvalidArgumentError):
            igatherv(world, 0, [1, 2], [1, 1, 1, 1])
        with pytest.raises(TruncationError):
            igatherv(world, 0, [1], [1, 2, 0, 3], capacity=5)


def test_single_rank_collectives_send_nothing():
    fabric = fabric_create(1)
    world = create_from_world(fabric)
    with as_rank(0):
        assert bcast(world, 0, [7]) == (7,)
        assert reduce(world, 0, [3], SUM) == (3,)
        assert scan(world, [3], SUM) == (3,)
        assert exscan(world, [3], SUM, identity=[0]) == (0,)
        assert gatherv(world, 0, [1, 2], [2]) == (1, 2)
        barrier(world)
    assert fabric.messages_sent == 0


def test_blocking_collectives_on_threads():
    p = 6
    fabric = fabric_create(p)
    world = create_from_world(fabric)
    inputs = make_inputs(p, 5)

    def target(rank):
        first = bcast(world, 2, inputs[2] if rank == 2 else None)
        # Back-to-back broadcasts from the same root stay in order
        second = bcast(world, 2, inputs[3] if rank == 2 else None)
        total = reduce(world, 1, inputs[rank], SUM)
        barrier(world)
        return first, second, total

    results = run_threads(fabric, target)
    assert all(result[0] == inputs[2] and result[1] == inputs[3] for result in results)
    assert results[1][2] == fold_all(SUM, inputs)


def test_distinct_tags_interleave():
    p = 5
    fabric = fabric_create(p)
    world = create_from_world(fabric)

    def program():
        local = world.rank()
        requests = [
            ibcast(world, 0, [1, 2] if local == 0 else None, tag=31),
            ibcast(world, 4, [3] if local == 4 else None, tag=32),
        ]
        if local % 2:
            requests.reverse()
        results = yield from wait_for_all(requests)
        return sorted(results)

    results, _ = run_lockstep(fabric, {rank: program() for rank in range(p)})
    assert all(results[rank] == [(1, 2), (3,)] for rank in range(p))


def test_progress_only_inside_test():
    fabric = fabric_create(4)
    world = create_from_world(fabric, CommMode.TAG_SCOPED)
    sub = split_range(world, 0, 2)
    log = []

    def sibling():
        local = world.rank()
        pending = ibarrier(world, tag=100)
        words = yield from wait_for(ibcast(sub, 0, [42] if local == 0 else None, tag=200))
        log.append(local)
        yield from wait_for(pending)
        return words

    def late():
        yield from wait_for(ibarrier(world, tag=100))
        return None

    lockstep = Lockstep(fabric)
    try:
        for rank in range(3):
            lockstep.spawn(rank, sibling())
        while lockstep.step():
            pass
        assert sorted(log) == [0, 1, 2]
        assert lockstep.pending == [0, 1, 2]
        lockstep.spawn(3, late())
        results = lockstep.run()
    finally:
        lockstep.close()
    assert [results[rank] for rank in range(3)] == [(42,)] * 3


def test_withheld_request_does_not_progress():
    fabric = fabric_create(4)
    world = create_from_world(fabric)
    with as_rank(3):
        withheld = ibcast(world, 0, None)

    def program():
        return (yield from wait_for(ibcast(world, 0, [9] if world.rank() == 0 else None)))

    run_lockstep(fabric, {rank: program() for rank in range(3)})
    assert not withheld.done
    assert withheld.transitions == 0
    with as_rank(3):
        assert not withheld.test()
        assert wait(withheld) == (9,)


def overlap_program(comms, tag):
    requests = []
    for comm, data in comms:
        requests.append(ibcast(comm, 0, data if comm.rank() == 0 else None, tag=tag))
    return (yield from wait_for_all(requests))


def overlap_programs(world):
    left = split_range(world, 0, 3)
    right = split_range(world, 2, 5)
    programs = {}
    for rank in range(6):
        comms = []
        if rank <= 3:
            comms.append((left, [1, 1]))
        if rank >= 2:
            comms.append((right, [2, 2, 2]))
        programs[rank] = overlap_program(comms, 50)
    return programs


def test_tag_scoped_overlap_is_flagged():
    fabric = fabric_create(6, debug=True)
    world = create_from_world(fabric, CommMode.TAG_SCOPED)
    run_lockstep(fabric, overlap_programs(world))
    assert {violation.rank for violation in fabric.registry.violations} == {2, 3}


def test_tag_scoped_overlap_strict():
    fabric = fabric_create(6, debug=True, strict=True)
    world = create_from_world(fabric, CommMode.TAG_SCOPED)
    with pytest.raises(TagConflictError):
        run_lockstep(fabric, overlap_programs(world))


def test_tag_scoped_overlap_delivers_to_the_wrong_broadcast():
    fabric = fabric_create(6)
    world = create_from_world(fabric, CommMode.TAG_SCOPED)
    results, _ = run_lockstep(fabric, overlap_programs(world))
    assert results[2] == [(1, 1), (2, 2, 2)]
    # Rank 2 is the right root and the left parent of rank 3; its right message arrives first
    assert results[3] == [(2, 2, 2), (1, 1)]
    assert results[5] == [(2, 2, 2)]


def test_context_scoped_overlap_is_clean():
    fabric = fabric_create(6, debug=True, strict=True)
    world = create_from_world(fabric, CommMode.CONTEXT_SCOPED)
    results, _ = run_lockstep(fabric, overlap_programs(world))
    assert fabric.registry.violations == []
    assert results[0] == [(1, 1)]
    assert results[2] == [(1, 1), (2, 2, 2)]
    assert results[3] == [(1, 1), (2, 2, 2)]
    assert results[5] == [(2, 2, 2)]


def test_schedule_mismatch_is_detected():
    fabric = fabric_create(4, debug=True)
    world = create_from_world(fabric)

    def program():
        local = world.rank()
        root = 2 if local == 3 else 0
        return (yield from wait_for(ibcast(world, root, [5] if local == root else None)))

    with pytest.raises(ScheduleMismatchError):
        run_lockstep(fabric, {rank: program() for rank in range(4)})
