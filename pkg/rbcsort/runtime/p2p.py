import logging
from abc import (
    ABC,
    abstractmethod,
)
from typing import (
    Any,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

from rbcsort.exceptions import (
    InvalidArgumentError,
    InvalidUseError,
    TruncationError,
)
from rbcsort.runtime.comm import Comm
from rbcsort.runtime.transport import (
    Endpoint,
    Envelope,
    EnvelopeHeader,
)
from rbcsort.runtime.workers import (
    Park,
    Program,
    current_rank,
    drive,
)
from rbcsort.utils.constants import (
    ANY_SOURCE,
    RESERVED_TAG_BASE,
    RESERVED_TAG_COUNT,
)

logger = logging.getLogger(__name__)


class Status(NamedTuple):
    source: int
    tag: int
    count: int


class Request(ABC):
    """
    Handle of a nonblocking operation. All progress happens inside `test`.
    """
    def __init__(self, endpoint: Endpoint) -> None:
        self.endpoint = endpoint
        self.done = False
        self.status: Optional[Status] = None
        self.result: Any = None
        self.transitions = 0

    def test(self) -> bool:
        me = current_rank()
        if me is not None and me != self.endpoint.rank:
            raise InvalidUseError(f"Rank {me} tested a request owned by rank {self.endpoint.rank}.")
        if self.done:
            return True
        self._progress()
        return self.done

    @abstractmethod
    def _progress(self) -> None:
        ...

    def _advance(self) -> None:
        self.transitions += 1
        self.endpoint.touch()

    def _finish(self, result: Any, status: Optional[Status]=None) -> None:
        self.result = result
        self.status = status
        self.done = True
        self._advance()


class SendRequest(Request):
    """
    Buffered send: complete as soon as the envelope is handed to the fabric.
    """
    def __init__(self, endpoint: Endpoint, envelope: Envelope) -> None:
        super().__init__(endpoint)
        endpoint.fabric.raw_send(envelope)
        self._finish(None)

    def _progress(self) -> None:
        ...


class _ReceiveRequest(Request):
    def __init__(self, comm: Comm, tag: int, capacity: Optional[int]) -> None:
        super().__init__(comm.endpoint())
        self.comm = comm
        self.tag = tag
        self.capacity = capacity

    def _check_capacity(self, header: EnvelopeHeader) -> None:
        """
        Runs while the envelope is still pending; a rejected envelope stays in the mailbox.
        """
        if self.capacity is not None and header.length > self.capacity:
            raise TruncationError(
                f"Pending {header.length} bytes from base rank {header.src} do not fit a {self.capacity}-byte buffer."
            )

    def _deliver(self, envelope: Envelope) -> None:
        status = Status(source=self.comm.local_rank(envelope.src), tag=envelope.tag, count=envelope.length)
        logger.debug('Rank %d matched %d bytes from rank %d (tag %d)',
                     self.endpoint.rank, envelope.length, envelope.src, envelope.tag)
        self._finish(envelope.payload, status)


class RecvRequest(_ReceiveRequest):
    def __init__(self, comm: Comm, src: int, tag: int, capacity: Optional[int]=None) -> None:
        super().__init__(comm, tag, capacity)
        self.src = comm.base_rank(src)

    def _progress(self) -> None:
        fabric = self.endpoint.fabric
        header = fabric.raw_probe(self.endpoint.rank, self.comm.ctx, self.tag, self.src)
        if header is None:
            return
        self._check_capacity(header)
        envelope = fabric.raw_recv(self.endpoint.rank, self.comm.ctx, self.tag, self.src)
        if envelope is not None:
            self._deliver(envelope)


class AnySourceRecvRequest(_ReceiveRequest):
    """
    Searches again on every test for a pending envelope whose sender is a member
    of the communicator, and latches onto the oldest one.
    """
    def _progress(self) -> None:
        fabric = self.endpoint.fabric
        header = fabric.raw_probe(self.endpoint.rank, self.comm.ctx, self.tag, ANY_SOURCE,
                                  accept=self.comm.is_member)
        if header is None:
            return
        self._check_capacity(header)
        envelope = fabric.raw_recv(self.endpoint.rank, self.comm.ctx, self.tag, header.src)
        if envelope is not None:
            self._deliver(envelope)


def is_reserved_tag(tag: int) -> bool:
    return RESERVED_TAG_BASE <= tag < RESERVED_TAG_BASE + RESERVED_TAG_COUNT


def check_user_tag(tag: int) -> None:
    if tag < 0:
        raise InvalidArgumentError(f"Tags should be non-negative. Got {tag}.")
    if is_reserved_tag(tag):
        raise InvalidArgumentError(
            f"Tag {tag} lies in the reserved collective band "
            f"[{RESERVED_TAG_BASE}, {RESERVED_TAG_BASE + RESERVED_TAG_COUNT - 1}]."
        )


def post_send(comm: Comm, dst: int, tag: int, payload: bytes) -> SendRequest:
    endpoint = comm.endpoint()
    envelope = Envelope(ctx=comm.ctx, tag=tag, src=endpoint.rank, dst=comm.base_rank(dst), payload=payload)
    return SendRequest(endpoint, envelope)


def post_recv(comm: Comm, src: int, tag: int, capacity: Optional[int]=None) -> Request:
    if src == ANY_SOURCE:
        return AnySourceRecvRequest(comm, tag, capacity)
    return RecvRequest(comm, src, tag, capacity)


def isend(comm: Comm, dst: int, tag: int, payload: bytes) -> Request:
    check_user_tag(tag)
    comm.rank()
    return post_send(comm, dst, tag, payload)


def send(comm: Comm, dst: int, tag: int, payload: bytes) -> None:
    wait(isend(comm, dst, tag, payload))


def irecv(comm: Comm, src: int, tag: int, capacity: Optional[int]=None) -> Request:
    check_user_tag(tag)
    comm.rank()
    return post_recv(comm, src, tag, capacity)


def recv(comm: Comm, src: int, tag: int, capacity: Optional[int]=None) -> Tuple[bytes, Status]:
    request = irecv(comm, src, tag, capacity)
    payload = wait(request)
    return payload, request.status


def iprobe(comm: Comm, src: int, tag: int) -> Optional[Status]:
    endpoint = comm.endpoint()
    fabric = endpoint.fabric
    if src == ANY_SOURCE:
        header = fabric.raw_probe(endpoint.rank, comm.ctx, tag, ANY_SOURCE, accept=comm.is_member)
    else:
        header = fabric.raw_probe(endpoint.rank, comm.ctx, tag, comm.base_rank(src))
    if header is None:
        return None
    return Status(source=comm.local_rank(header.src), tag=header.tag, count=header.length)


def probe(comm: Comm, src: int, tag: int) -> Status:
    endpoint = comm.endpoint()
    while True:
        version = endpoint.mailbox_version()
        status = iprobe(comm, src, tag)
        if status is not None:
            return status
        endpoint.park(version)


def test(request: Request) -> bool:
    return request.test()


def testall(requests: Sequence[Request]) -> bool:
    # Every request is tested, even after the first incomplete one.
    completed = [request.test() for request in requests]
    return all(completed)


def wait_for(request: Request) -> Program[Any]:
    """
    Rank-program form of `wait`: `result = yield from wait_for(request)`.
    """
    endpoint = request.endpoint
    while True:
        version = endpoint.mailbox_version()
        activity = endpoint.activity
        if request.test():
            return request.result
        if endpoint.activity == activity:
            yield Park(version)


def wait_for_all(requests: Sequence[Request]) -> Program[List[Any]]:
    if not requests:
        return []
    endpoint = requests[0].endpoint
    while True:
        version = endpoint.mailbox_version()
        activity = endpoint.activity
        if testall(requests):
            return [request.result for request in requests]
        if endpoint.activity == activity:
            yield Park(version)


def wait(request: Request) -> Any:
    return drive(wait_for(request), request.endpoint)


def waitall(requests: Sequence[Request]) -> List[Any]:
    if not requests:
        return []
    return drive(wait_for_all(requests), requests[0].endpoint)
