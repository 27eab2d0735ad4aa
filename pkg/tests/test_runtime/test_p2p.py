import random

import pytest

from rbcsort.exceptions import (
    InvalidArgumentError,
    InvalidUseError,
    TruncationError,
)
from rbcsort.runtime.comm import (
    CommMode,
    create_from_world,
    split_range,
)
from rbcsort.runtime.p2p import (
    iprobe,
    irecv,
    isend,
    probe,
    recv,
    send,
    test,
    testall,
    wait,
    waitall,
)
from rbcsort.runtime.transport import fabric_create
from rbcsort.runtime.workers import (
    as_rank,
    run_threads,
)
from rbcsort.utils.constants import (
    ANY_SOURCE,
    RESERVED_TAG_BASE,
)

# Imported library helpers, not pytest tests; keep pytest from collecting them.
test.__test__ = False  # type: ignore[attr-defined]
testall.__test__ = False  # type: ignore[attr-defined]


@pytest.fixture
def comm():
    world = create_from_world(fabric_create(16), CommMode.CONTEXT_SCOPED)
    return split_range(world, 4, 9)


def test_send_translates_destination(comm):
    with as_rank(4):
        request = isend(comm, 2, 7, b'hi')
        assert test(request)
        assert wait(request) is None
    pending = comm.fabric.mailboxes[6].pending
    assert len(pending) == 1
    assert pending[0].dst == 6
    assert pending[0].src == 4
    assert pending[0].ctx == comm.ctx


@pytest.mark.parametrize(
    'dst, tag',
    [
        (6, 7),
        (-1, 7),
        (1, -1),
        (1, RESERVED_TAG_BASE),
        (1, RESERVED_TAG_BASE + 63),
    ]
)
def test_send_rejects_bad_arguments(comm, dst, tag):
    with as_rank(4):
        with pytest.raises(InvalidArgumentError):
            isend(comm, dst, tag, b'')
    assert comm.fabric.messages_sent == 0


def test_send_from_non_member(comm):
    with as_rank(2):
        with pytest.raises(InvalidUseError):
            isend(comm, 0, 1, b'')


def test_self_send_single_rank():
    world = create_from_world(fabric_create(1))
    with as_rank(0):
        assert test(isend(world, 0, 1, b'me'))
        payload, status = recv(world, 0, 1)
    assert payload == b'me'
    assert status.source == 0
    assert status.count == 2


def test_any_source_reports_local_rank(comm):
    with as_rank(6):
        send(comm, 0, 5, b'x')
    with as_rank(4):
        payload, status = recv(comm, ANY_SOURCE, 5)
    assert payload == b'x'
    assert status.source == 2
    assert status.tag == 5


def test_any_source_filters_non_members():
    world = create_from_world(fabric_create(8), CommMode.TAG_SCOPED)
    left = split_range(world, 0, 3)
    right = split_range(world, 3, 7)
    assert left.ctx == right.ctx
    with as_rank(5):
        send(right, 0, 9, b'right')
    with as_rank(3):
        assert iprobe(left, ANY_SOURCE, 9) is None
        request = irecv(left, ANY_SOURCE, 9)
        assert not test(request)
        status = iprobe(right, ANY_SOURCE, 9)
        assert status.source == 2
        payload, status = recv(right, ANY_SOURCE, 9)
        assert payload == b'right'
        assert status.source == 2
        assert not test(request)
    with as_rank(1):
        send(left, 3, 9, b'left')
    with as_rank(3):
        assert test(request)
        assert request.result == b'left'
        assert request.status.source == 1


def test_any_source_latches_oldest_member():
    world = create_from_world(fabric_create(4))
    with as_rank(2):
        send(world, 0, 1, b'first')
    with as_rank(1):
        send(world, 0, 1, b'second')
    with as_rank(0):
        assert recv(world, ANY_SOURCE, 1)[0] == b'first'
        assert recv(world, ANY_SOURCE, 1)[0] == b'second'


def test_receive_order_is_send_order(comm):
    with as_rank(5):
        for index in range(10):
            send(comm, 3, 2, bytes([index]))
    with as_rank(7):
        received = [recv(comm, 1, 2)[0][0] for _ in range(10)]
    assert received == list(range(10))


def test_truncation(comm):
    with as_rank(5):
        send(comm, 0, 2, b'12345')
    with as_rank(4):
        request = irecv(comm, 1, 2, capacity=4)
        with pytest.raises(TruncationError):
            test(request)


@pytest.mark.parametrize('src', [1, ANY_SOURCE])
def test_truncation_keeps_message_pending(comm, src):
    with as_rank(5):
        send(comm, 0, 2, b'12345')
    with as_rank(4):
        with pytest.raises(TruncationError):
            test(irecv(comm, src, 2, capacity=4))
        assert comm.fabric.messages_pending == 1
        payload, status = recv(comm, src, 2, capacity=5)
    assert payload == b'12345'
    assert status.count == 5
    assert comm.fabric.messages_pending == 0


def test_recv_from_non_member_rank(comm):
    with as_rank(4):
        with pytest.raises(InvalidArgumentError):
            irecv(comm, 6, 2)


def test_foreign_request(comm):
    with as_rank(4):
        request = irecv(comm, 1, 2)
    with as_rank(5):
        with pytest.raises(InvalidUseError):
            test(request)


def test_testall_and_idempotence(comm):
    with as_rank(4):
        done = isend(comm, 1, 3, b'')
        pending = irecv(comm, 1, 3)
        transitions = done.transitions
        assert not testall([done, pending])
        assert done.transitions == transitions
        assert done.done
        assert waitall([done]) == [None]
        assert waitall([]) == []


def test_probe_concrete_source(comm):
    with as_rank(8):
        send(comm, 0, 4, b'abc')
    with as_rank(4):
        assert iprobe(comm, 3, 4) is None
        status = probe(comm, 4, 4)
        assert status.source == 4
        assert status.count == 3
        # Probing leaves the message in place
        assert recv(comm, 4, 4)[0] == b'abc'


def test_blocking_receive_across_threads():
    fabric = fabric_create(2)
    world = create_from_world(fabric)

    def target(rank):
        if rank == 0:
            send(world, 1, 3, b'ping')
            return None
        return recv(world, 0, 3)[0]

    assert run_threads(fabric, target) == [None, b'ping']


@pytest.mark.parametrize('seed', [1, 2, 3])
def test_wildcard_soundness_on_one_rank_overlap(seed):
    world = create_from_world(fabric_create(8), CommMode.TAG_SCOPED)
    left = split_range(world, 0, 4)
    right = split_range(world, 4, 7)
    rng = random.Random(seed)
    senders = [rng.choice([0, 1, 2, 3, 5, 6, 7]) for _ in range(10000)]
    for sender in senders:
        with as_rank(sender):
            if sender < 4:
                send(left, 4, 11, bytes([sender]))
            else:
                send(right, 0, 11, bytes([sender]))
    expected = {
        'left': sum(1 for sender in senders if sender < 4),
        'right': sum(1 for sender in senders if sender > 4),
    }
    comms = {'left': left, 'right': right}
    with as_rank(4):
        while any(expected.values()):
            name = rng.choice([name for name, count in expected.items() if count])
            comm = comms[name]
            payload, status = recv(comm, ANY_SOURCE, 11)
            assert comm.is_member(payload[0])
            assert comm.base_rank(status.source) == payload[0]
            expected[name] -= 1
    assert world.fabric.messages_pending == 0
