import logging
import operator
from dataclasses import dataclass
from functools import reduce as _reduce
from typing import (
    Any,
    Callable,
    ClassVar,
    Generator,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
)

from eth_utils import to_tuple

from rbcsort.exceptions import (
    InvalidArgumentError,
    ProtocolError,
    ScheduleMismatchError,
    TruncationError,
)
from rbcsort.runtime.comm import Comm
from rbcsort.runtime.p2p import (
    Request,
    post_recv,
    post_send,
    testall,
    wait,
)
from rbcsort.utils.constants import (
    BARRIER_DOWN_TAG,
    BARRIER_UP_TAG,
    BCAST_TAG,
    EXSCAN_TAG,
    GATHER_TAG,
    GATHERV_TAG,
    IBARRIER_DOWN_TAG,
    IBARRIER_UP_TAG,
    IBCAST_TAG,
    IEXSCAN_TAG,
    IGATHER_TAG,
    IGATHERV_TAG,
    IREDUCE_TAG,
    ISCAN_TAG,
    REDUCE_TAG,
    SCAN_TAG,
    SCHEDULE_DIGEST_LENGTH,
)
from rbcsort.utils.crypto import schedule_digest
from rbcsort.utils.ssz import (
    Words,
    decode_partial,
    decode_words,
    encode_partial,
    encode_words,
)

logger = logging.getLogger(__name__)

Steps = Generator[List[Request], None, Any]


@dataclass(frozen=True)
class ReduceOp:
    """
    An associative combiner on equal-length word vectors. Reductions keep rank order
    whether or not the combiner commutes.
    """
    combiner: Callable[[Words, Words], Words]
    commutative: bool = False
    name: str = 'custom'

    def __call__(self, left: Words, right: Words) -> Words:
        if len(left) != len(right):
            raise InvalidArgumentError(
                f"Reduction operands should have equal lengths. Got {len(left)} and {len(right)}."
            )
        return tuple(self.combiner(left, right))


def elementwise(function: Callable[[int, int], int]) -> Callable[[Words, Words], Words]:
    def combine(left: Words, right: Words) -> Words:
        return tuple(map(function, left, right))
    return combine


SUM = ReduceOp(elementwise(operator.add), commutative=True, name='sum')
MIN = ReduceOp(elementwise(min), commutative=True, name='min')
MAX = ReduceOp(elementwise(max), commutative=True, name='max')


def fold_all(op: ReduceOp, vectors: Iterable[Sequence[int]]) -> Words:
    """
    Sequential left fold, the reference for every reduction.
    """
    return _reduce(op, (tuple(vector) for vector in vectors))


def _fold(op: ReduceOp, left: Optional[Words], right: Optional[Words]) -> Optional[Words]:
    if left is None:
        return right
    if right is None:
        return left
    return op(left, right)


# Binomial tree over virtual ranks: the parent of v clears its lowest set bit

def lowest_bit(vrank: int) -> int:
    return vrank & -vrank


def tree_parent(vrank: int) -> int:
    return vrank & (vrank - 1)


@to_tuple
def tree_children(vrank: int, size: int) -> Iterable[int]:
    limit = lowest_bit(vrank) if vrank else size
    step = 1
    while step < limit and vrank + step < size:
        yield vrank + step
        step <<= 1


def tree_rounds(size: int) -> int:
    return (size - 1).bit_length()


class CollectiveRequest(Request):
    """
    A collective as a state machine. Each state does local work and ends with the
    receives its successor depends on; one test call enters at most one new state.
    """
    name: ClassVar[str] = 'collective'
    code: ClassVar[int] = 0

    def __init__(self, comm: Comm, root: int, tag: int) -> None:
        super().__init__(comm.endpoint())
        if not 0 <= root < comm.size:
            raise InvalidArgumentError(f"Root should be in [0, {comm.size}). Got {root}.")
        if tag < 0:
            raise InvalidArgumentError(f"Tags should be non-negative. Got {tag}.")
        self.comm = comm
        self.size = comm.size
        self.me = comm.rank()
        self.root = root
        self.tag = tag
        self.vrank = (self.me - root) % self.size
        fabric = self.endpoint.fabric
        self.digest = schedule_digest(self.code, root, tag, length=SCHEDULE_DIGEST_LENGTH) if fabric.debug else b''
        self._claim = None
        if fabric.registry is not None:
            self._claim = fabric.registry.claim(self.endpoint.rank, comm.ctx, tag, comm.member_set)
        self._pending: List[Request] = []
        self._steps: Optional[Steps] = None

    @property
    def total_rounds(self) -> int:
        return tree_rounds(self.size)

    def _progress(self) -> None:
        if not testall(self._pending):
            return
        if self._steps is None:
            self._steps = self._schedule()
        try:
            self._pending = list(next(self._steps))
        except StopIteration as stop:
            self._pending = []
            if self._claim is not None:
                self.endpoint.fabric.registry.release(self._claim)
            logger.debug('Rank %d completed %s (tag %d) after %d transitions, tree depth %d',
                         self.endpoint.rank, self.name, self.tag, self.transitions + 1, self.total_rounds)
            self._finish(stop.value)
            return
        self._advance()

    def _schedule(self) -> Steps:
        raise NotImplementedError

    def _real(self, vrank: int) -> int:
        return (vrank + self.root) % self.size

    def _send(self, vrank: int, payload: bytes, tag: Optional[int]=None) -> None:
        post_send(self.comm, self._real(vrank), self.tag if tag is None else tag, self.digest + payload)

    def _recv(self, vrank: int, tag: Optional[int]=None) -> Request:
        return post_recv(self.comm, self._real(vrank), self.tag if tag is None else tag)

    def _unwrap(self, request: Request) -> bytes:
        data: bytes = request.result
        if data[:len(self.digest)] != self.digest:
            raise ScheduleMismatchError(
                f"Rank {self.endpoint.rank} in {self.name} (root {self.root}, tag {self.tag}) received a message "
                f"from local rank {request.status.source} that belongs to a different collective call."
            )
        return data[len(self.digest):]


class BcastRequest(CollectiveRequest):
    name = 'bcast'
    code = 1

    def __init__(self, comm: Comm, root: int, payload: Optional[bytes], tag: int,
                 decode: Callable[[bytes], Any]=decode_words) -> None:
        super().__init__(comm, root, tag)
        self.payload = payload
        self.decode = decode
        if self.vrank == 0 and payload is None:
            raise InvalidArgumentError('The broadcast root needs a buffer.')

    def _schedule(self) -> Steps:
        if self.vrank == 0:
            data = self.payload
        else:
            request = self._recv(tree_parent(self.vrank))
            yield [request]
            data = self._unwrap(request)
        for child in tree_children(self.vrank, self.size):
            self._send(child, data)
        return self.decode(data)


class ReduceRequest(CollectiveRequest):
    name = 'reduce'
    code = 2

    def __init__(self, comm: Comm, root: int, sendbuf: Sequence[int], op: ReduceOp, tag: int) -> None:
        super().__init__(comm, root, tag)
        self.sendbuf = tuple(sendbuf)
        self.op = op

    def _schedule(self) -> Steps:
        # Ranks below the root wrap around in the rotated tree and are folded separately
        high: Optional[Words] = self.sendbuf if self.me >= self.root else None
        low: Optional[Words] = None if self.me >= self.root else self.sendbuf
        requests = [self._recv(child) for child in tree_children(self.vrank, self.size)]
        if requests:
            yield requests
        for request in requests:
            child_high, child_low = decode_partial(self._unwrap(request))
            high = _fold(self.op, high, child_high)
            low = _fold(self.op, low, child_low)
        if self.vrank != 0:
            self._send(tree_parent(self.vrank), encode_partial(high, low))
            return None
        return _fold(self.op, low, high)


class ScanRequest(CollectiveRequest):
    """
    Up-sweep of subtree folds to rank 0, then a down-sweep of exclusive prefixes.
    """
    name = 'scan'
    code = 3
    exclusive: ClassVar[bool] = False

    def __init__(self, comm: Comm, sendbuf: Sequence[int], op: ReduceOp, tag: int,
                 identity: Optional[Sequence[int]]=None) -> None:
        super().__init__(comm, 0, tag)
        self.sendbuf = tuple(sendbuf)
        self.op = op
        self.identity = tuple(identity) if identity is not None else None

    def _schedule(self) -> Steps:
        children = tree_children(self.vrank, self.size)
        requests = [self._recv(child) for child in children]
        if requests:
            yield requests
        subtree = self.sendbuf
        prefixes: List[Words] = []
        for request in requests:
            prefixes.append(subtree)
            subtree = self.op(subtree, decode_words(self._unwrap(request)))
        before: Optional[Words] = None
        if self.vrank != 0:
            parent = tree_parent(self.vrank)
            self._send(parent, encode_words(subtree))
            request = self._recv(parent)
            yield [request]
            before = decode_words(self._unwrap(request))
        for child, prefix in zip(children, prefixes):
            self._send(child, encode_words(_fold(self.op, before, prefix)))
        if self.exclusive:
            return before if before is not None else self.identity
        return _fold(self.op, before, self.sendbuf)


class ExscanRequest(ScanRequest):
    name = 'exscan'
    code = 4
    exclusive = True


class GathervRequest(CollectiveRequest):
    name = 'gatherv'
    code = 5

    def __init__(self, comm: Comm, root: int, sendbuf: Sequence[int], counts: Optional[Sequence[int]],
                 tag: int, capacity: Optional[int]=None) -> None:
        super().__init__(comm, root, tag)
        self.sendbuf = tuple(sendbuf)
        self.counts: Optional[Tuple[int, ...]] = None
        if self.vrank == 0:
            if counts is None or len(counts) != self.size:
                raise InvalidArgumentError(f"The gather root needs {self.size} counts. Got {counts}.")
            self.counts = tuple(counts)
            if self.counts[self.me] != len(self.sendbuf):
                raise InvalidArgumentError(
                    f"Root count {self.counts[self.me]} does not match its {len(self.sendbuf)} words."
                )
            if capacity is not None and sum(self.counts) > capacity:
                raise TruncationError(f"Gathering {sum(self.counts)} words into a {capacity}-word buffer.")

    def _schedule(self) -> Steps:
        requests = [self._recv(child) for child in tree_children(self.vrank, self.size)]
        if requests:
            yield requests
        gathered = list(self.sendbuf)
        for request in requests:
            gathered.extend(decode_words(self._unwrap(request)))
        if self.vrank != 0:
            self._send(tree_parent(self.vrank), encode_words(gathered))
            return None
        return self._reorder(gathered)

    def _reorder(self, gathered: List[int]) -> Words:
        counts = self.counts
        if len(gathered) != sum(counts):
            raise ProtocolError(f"The gather root expected {sum(counts)} words and received {len(gathered)}.")
        # Subtree order is rotated by the root; restore ascending local ranks
        pieces: List[List[int]] = [[] for _ in range(self.size)]
        position = 0
        for vrank in range(self.size):
            rank = self._real(vrank)
            pieces[rank] = gathered[position:position + counts[rank]]
            position += counts[rank]
        return tuple(word for piece in pieces for word in piece)


class BarrierRequest(CollectiveRequest):
    name = 'barrier'
    code = 6

    def __init__(self, comm: Comm, up_tag: int, down_tag: int) -> None:
        super().__init__(comm, 0, up_tag)
        self.down_tag = down_tag

    def _schedule(self) -> Steps:
        children = tree_children(self.vrank, self.size)
        requests = [self._recv(child) for child in children]
        if requests:
            yield requests
        for request in requests:
            self._unwrap(request)
        if self.vrank != 0:
            parent = tree_parent(self.vrank)
            self._send(parent, b'')
            request = self._recv(parent, self.down_tag)
            yield [request]
            self._unwrap(request)
        for child in children:
            self._send(child, b'', self.down_tag)
        return None


# Nonblocking collectives

def ibcast(comm: Comm, root: int, buffer: Optional[Sequence[int]], tag: int=IBCAST_TAG) -> Request:
    """
    Only the root's buffer is read; every member's request completes with the root's words.
    """
    payload = encode_words(buffer) if comm.rank() == root and buffer is not None else None
    return BcastRequest(comm, root, payload, tag)


def ireduce(comm: Comm, root: int, sendbuf: Sequence[int], op: ReduceOp, tag: int=IREDUCE_TAG) -> Request:
    return ReduceRequest(comm, root, sendbuf, op, tag)


def iscan(comm: Comm, sendbuf: Sequence[int], op: ReduceOp, tag: int=ISCAN_TAG) -> Request:
    return ScanRequest(comm, sendbuf, op, tag)


def iexscan(comm: Comm, sendbuf: Sequence[int], op: ReduceOp, identity: Optional[Sequence[int]]=None,
            tag: int=IEXSCAN_TAG) -> Request:
    if identity is None:
        raise InvalidArgumentError('An exclusive scan needs the identity element for rank 0.')
    return ExscanRequest(comm, sendbuf, op, tag, identity=identity)


def igatherv(comm: Comm, root: int, sendbuf: Sequence[int], counts: Optional[Sequence[int]]=None,
             tag: int=IGATHERV_TAG, capacity: Optional[int]=None) -> Request:
    return GathervRequest(comm, root, sendbuf, counts, tag, capacity)


def igather(comm: Comm, root: int, sendbuf: Sequence[int], tag: int=IGATHER_TAG,
            capacity: Optional[int]=None) -> Request:
    return GathervRequest(comm, root, sendbuf, [len(sendbuf)] * comm.size, tag, capacity)


def ibarrier(comm: Comm, tag: Optional[int]=None) -> Request:
    if tag is None:
        return BarrierRequest(comm, IBARRIER_UP_TAG, IBARRIER_DOWN_TAG)
    return BarrierRequest(comm, tag, tag)


# Blocking collectives: the nonblocking schedule on the operation's own tag, then wait

def bcast(comm: Comm, root: int, buffer: Optional[Sequence[int]]) -> Words:
    return wait(ibcast(comm, root, buffer, tag=BCAST_TAG))


def reduce(comm: Comm, root: int, sendbuf: Sequence[int], op: ReduceOp) -> Optional[Words]:
    return wait(ireduce(comm, root, sendbuf, op, tag=REDUCE_TAG))


def scan(comm: Comm, sendbuf: Sequence[int], op: ReduceOp) -> Words:
    return wait(iscan(comm, sendbuf, op, tag=SCAN_TAG))


def exscan(comm: Comm, sendbuf: Sequence[int], op: ReduceOp, identity: Optional[Sequence[int]]=None) -> Words:
    return wait(iexscan(comm, sendbuf, op, identity, tag=EXSCAN_TAG))


def gatherv(comm: Comm, root: int, sendbuf: Sequence[int], counts: Optional[Sequence[int]]=None,
            capacity: Optional[int]=None) -> Optional[Words]:
    return wait(igatherv(comm, root, sendbuf, counts, tag=GATHERV_TAG, capacity=capacity))


def gather(comm: Comm, root: int, sendbuf: Sequence[int], capacity: Optional[int]=None) -> Optional[Words]:
    return wait(igather(comm, root, sendbuf, tag=GATHER_TAG, capacity=capacity))


def barrier(comm: Comm) -> None:
    wait(BarrierRequest(comm, BARRIER_UP_TAG, BARRIER_DOWN_TAG))
