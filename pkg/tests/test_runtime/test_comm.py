import pytest
from hypothesis import (
    given,
    strategies as st,
)

from rbcsort.exceptions import (
    InvalidArgumentError,
    InvalidUseError,
)
from rbcsort.runtime.comm import (
    CommMode,
    GroupComm,
    comm_rank,
    comm_size,
    create_from_world,
    split_range,
    translate_base,
    translate_rank,
)
from rbcsort.runtime.context import (
    ContextId,
    ctx_registry_check,
    derive_range_ctx,
)
from rbcsort.runtime.transport import fabric_create
from rbcsort.runtime.workers import as_rank


def test_create_from_world():
    fabric = fabric_create(16)
    world = create_from_world(fabric)
    assert world.size == 16
    assert world.ctx == ContextId(a=0, b=0, f=0, l=15, c=0)
    assert world.members == tuple(range(16))
    assert fabric.messages_sent == 0


def test_split_range_contiguous():
    world = create_from_world(fabric_create(16))
    comm = split_range(world, 4, 9)
    assert comm_size(comm) == 6
    assert comm_rank(comm, 6) == 2
    assert comm_rank(comm, 4) == 0
    assert translate_rank(comm, 2) == 6
    assert translate_base(comm, 7) == 3


def test_split_range_strided():
    world = create_from_world(fabric_create(16), CommMode.TAG_SCOPED)
    comm = split_range(world, 2, 11, 3)
    assert comm.members == (2, 5, 8, 11)
    assert comm_size(comm) == 4
    assert translate_rank(comm, 3) == 11
    assert comm.ctx == world.ctx
    with pytest.raises(InvalidArgumentError):
        translate_base(comm, 4)


def test_strides_compose():
    world = create_from_world(fabric_create(16), CommMode.TAG_SCOPED)
    comm = split_range(world, 2, 11, 3)
    assert split_range(comm, 1, 3).members == (5, 8, 11)
    assert split_range(comm, 0, 3, 2).members == (2, 8)
    assert split_range(comm, 0, 3, 2).stride == 6


def test_context_scoped_split_derives_context():
    world = create_from_world(fabric_create(16), CommMode.CONTEXT_SCOPED)
    same = split_range(world, 0, 15)
    assert same.members == world.members
    assert same.ctx == ContextId(a=0, b=0, f=0, l=15, c=1)
    upper = split_range(same, 8, 15)
    assert upper.ctx == ContextId(a=0, b=0, f=8, l=15, c=2)
    assert split_range(upper, 2, 3).ctx == ContextId(a=0, b=0, f=10, l=11, c=3)


def test_context_scoped_split_rejects_stride():
    world = create_from_world(fabric_create(8), CommMode.CONTEXT_SCOPED)
    with pytest.raises(InvalidUseError):
        split_range(world, 0, 7, 2)


@pytest.mark.parametrize(
    'first, last, stride',
    [
        (-1, 3, 1),
        (3, 2, 1),
        (0, 8, 1),
        (0, 7, 0),
    ]
)
def test_split_range_bounds(first, last, stride):
    world = create_from_world(fabric_create(8), CommMode.TAG_SCOPED)
    with pytest.raises(InvalidArgumentError):
        split_range(world, first, last, stride)


def test_split_range_sends_nothing():
    fabric = fabric_create(64)
    world = create_from_world(fabric, CommMode.CONTEXT_SCOPED)
    comm = world
    for _ in range(5):
        comm = split_range(comm, 1, comm.size - 1)
    assert comm.members == tuple(range(5, 64))
    assert fabric.messages_sent == 0


def test_group_comm_cannot_split_by_range():
    fabric = fabric_create(8)
    group = GroupComm(fabric=fabric, ranks=(1, 4, 6), ctx=ContextId(a=1, b=0, f=0, l=3, c=0))
    assert group.local_rank(4) == 1
    with pytest.raises(InvalidUseError):
        split_range(group, 0, 1)


@pytest.mark.parametrize(
    'ranks',
    [
        (),
        (1, 1),
        (2, 9),
    ]
)
def test_group_comm_invalid_ranks(ranks):
    with pytest.raises(InvalidArgumentError):
        GroupComm(fabric=fabric_create(8), ranks=ranks, ctx=ContextId(a=0, b=1, f=0, l=len(ranks), c=0))


def test_rank_of_calling_worker():
    world = create_from_world(fabric_create(8))
    comm = split_range(world, 4, 7)
    with as_rank(6):
        assert comm.rank() == 2
        assert comm.endpoint().rank == 6
    with as_rank(1):
        with pytest.raises(InvalidUseError):
            comm.rank()
    with pytest.raises(InvalidUseError):
        comm.rank()


@given(
    size=st.integers(min_value=1, max_value=64),
    data=st.data(),
)
def test_translation_is_a_bijection(size, data):
    world = create_from_world(fabric_create(size), CommMode.TAG_SCOPED)
    first = data.draw(st.integers(min_value=0, max_value=size - 1))
    last = data.draw(st.integers(min_value=first, max_value=size - 1))
    stride = data.draw(st.integers(min_value=1, max_value=8))
    comm = split_range(world, first, last, stride)
    assert comm.size == (last - first) // stride + 1
    for local in range(comm.size):
        assert translate_base(comm, translate_rank(comm, local)) == local
    assert all(comm.is_member(base) for base in comm.members)


@pytest.mark.parametrize(
    'parent, first, last, result',
    [
        (ContextId(7, 3, 0, 15, 0), 8, 15, ContextId(7, 3, 8, 15, 1)),
        (ContextId(7, 3, 0, 15, 0), 0, 15, ContextId(7, 3, 0, 15, 1)),
        (ContextId(7, 3, 8, 15, 1), 1, 2, ContextId(7, 3, 9, 10, 2)),
        (ContextId(7, 3, 0, 15, 0), 3, 16, None),
        (ContextId(7, 3, 0, 15, 0), 4, 3, None),
    ]
)
def test_derive_range_ctx(parent, first, last, result):
    if result is not None:
        assert derive_range_ctx(parent, first, last) == result
    else:
        with pytest.raises(InvalidArgumentError):
            derive_range_ctx(parent, first, last)


def test_ctx_registry_check():
    fabric = fabric_create(8)
    world = create_from_world(fabric, CommMode.CONTEXT_SCOPED)
    left = split_range(world, 0, 3)
    right = split_range(world, 4, 7)
    identity = split_range(world, 0, 7)
    assert ctx_registry_check([world, left, right, identity])
    # Handles of one communicator held by several ranks
    assert ctx_registry_check([left, split_range(world, 0, 3)])
    forged = GroupComm(fabric=fabric, ranks=(4, 5), ctx=left.ctx)
    assert not ctx_registry_check([left, forged])
