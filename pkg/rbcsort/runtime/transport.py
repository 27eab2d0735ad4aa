import logging
import threading
from dataclasses import dataclass
from typing import (
    TYPE_CHECKING,
    Callable,
    Dict,
    FrozenSet,
    List,
    NamedTuple,
    Optional,
    Tuple,
)

from rbcsort.exceptions import (
    DeadlockError,
    InvalidArgumentError,
    TagConflictError,
)
from rbcsort.utils.constants import (
    ANY_SOURCE,
    DEFAULT_DEADLOCK_TIMEOUT,
)

if TYPE_CHECKING:
    from rbcsort.runtime.comm import ContextId  # noqa: F401

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Envelope:
    ctx: 'ContextId'
    tag: int
    src: int
    dst: int
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload)

    @property
    def header(self) -> 'EnvelopeHeader':
        return EnvelopeHeader(ctx=self.ctx, tag=self.tag, src=self.src, dst=self.dst, length=self.length)


class EnvelopeHeader(NamedTuple):
    ctx: 'ContextId'
    tag: int
    src: int
    dst: int
    length: int


class Mailbox:
    """
    Pending envelopes addressed to one base rank, oldest first.
    `version` increases on every arrival so parked workers can tell whether to look again.
    """
    def __init__(self) -> None:
        self.pending: List[Envelope] = []
        self.version = 0
        self.condition = threading.Condition()

    def __len__(self) -> int:
        with self.condition:
            return len(self.pending)

    def deliver(self, envelope: Envelope) -> None:
        with self.condition:
            self.pending.append(envelope)
            self.version += 1
            self.condition.notify_all()

    def find(self, ctx: 'ContextId', tag: int, src: int,
             accept: Optional[Callable[[int], bool]]=None) -> Optional[int]:
        with self.condition:
            for index, envelope in enumerate(self.pending):
                if envelope.ctx != ctx or envelope.tag != tag:
                    continue
                if src != ANY_SOURCE and envelope.src != src:
                    continue
                if accept is not None and not accept(envelope.src):
                    continue
                return index
        return None


class Claim(NamedTuple):
    rank: int
    ctx: 'ContextId'
    tag: int
    members: FrozenSet[int]
    serial: int


class TagViolation(NamedTuple):
    rank: int
    ctx: 'ContextId'
    tag: int
    first: FrozenSet[int]
    second: FrozenSet[int]


class TagRegistry:
    """
    Debug bookkeeping of in-flight collective operations per (rank, context, tag).
    Two concurrent operations on communicators that share the context and at least
    two member ranks may steal each other's messages; such pairs are recorded.
    """
    def __init__(self, strict: bool=False) -> None:
        self.strict = strict
        self.violations: List[TagViolation] = []
        self._claims: Dict[Tuple[int, 'ContextId', int], List[Claim]] = {}
        self._serial = 0
        self._lock = threading.Lock()

    def claim(self, rank: int, ctx: 'ContextId', tag: int, members: FrozenSet[int]) -> Claim:
        with self._lock:
            self._serial += 1
            claim = Claim(rank=rank, ctx=ctx, tag=tag, members=members, serial=self._serial)
            live = self._claims.setdefault((rank, ctx, tag), [])
            for other in live:
                if len(other.members & members) >= 2:
                    violation = TagViolation(rank=rank, ctx=ctx, tag=tag, first=other.members, second=members)
                    self.violations.append(violation)
                    logger.warning('Concurrent operations with tag %d on overlapping communicators at rank %d',
                                   tag, rank)
                    if self.strict:
                        raise TagConflictError(
                            f"Tag {tag} is already in use at rank {rank} by a communicator sharing "
                            f"{len(other.members & members)} ranks with this one."
                        )
            live.append(claim)
            return claim

    def release(self, claim: Claim) -> None:
        with self._lock:
            live = self._claims.get((claim.rank, claim.ctx, claim.tag), [])
            self._claims[(claim.rank, claim.ctx, claim.tag)] = [c for c in live if c.serial != claim.serial]


class Endpoint:
    """
    The view of the fabric owned by one simulated rank.
    """
    def __init__(self, fabric: 'Fabric', rank: int, leader_counter: int=0) -> None:
        self.fabric = fabric
        self.rank = rank
        self.leader_counter = leader_counter
        self.activity = 0

    @property
    def mailbox(self) -> Mailbox:
        return self.fabric.mailboxes[self.rank]

    def next_leader_counter(self) -> int:
        value = self.leader_counter
        self.leader_counter += 1
        return value

    def touch(self) -> None:
        self.activity += 1

    def mailbox_version(self) -> int:
        return self.mailbox.version

    def park(self, version: int, timeout: Optional[float]=None) -> None:
        """
        Block until the mailbox version moves past `version`.
        """
        timeout = self.fabric.deadlock_timeout if timeout is None else timeout
        mailbox = self.mailbox
        with mailbox.condition:
            while mailbox.version == version:
                if self.fabric.aborted:
                    raise DeadlockError(f"Rank {self.rank} woke up on an aborted fabric.")
                if not mailbox.condition.wait(timeout):
                    raise DeadlockError(f"Rank {self.rank} waited {timeout}s without a new message.")


class Fabric:
    """
    In-process message fabric connecting `size` simulated ranks.
    Sends are buffered (eager); a send never waits for the receiver.
    """
    def __init__(self, size: int, *, debug: bool=False, strict: bool=False,
                 deadlock_timeout: float=DEFAULT_DEADLOCK_TIMEOUT) -> None:
        if size < 1:
            raise InvalidArgumentError(f"A fabric needs at least one rank. Got {size}.")
        self.size = size
        self.debug = debug
        self.deadlock_timeout = deadlock_timeout
        self.registry: Optional[TagRegistry] = TagRegistry(strict=strict) if debug else None
        self.mailboxes = [Mailbox() for _ in range(size)]
        # Rank 0 led the creation of the world context <0, 0, 0, P-1, 0>
        self.endpoints = [Endpoint(self, rank, leader_counter=1 if rank == 0 else 0) for rank in range(size)]
        self.messages_sent = 0
        self.bytes_sent = 0
        self.messages_received = 0
        self.sent_by_rank = [0] * size
        self.bytes_by_rank = [0] * size
        self.aborted = False
        self._staged: Optional[List[Envelope]] = None
        self._lock = threading.Lock()
        logger.debug('Created fabric with %d ranks (debug=%s)', size, debug)

    def endpoint(self, rank: int) -> Endpoint:
        self._check_rank(rank)
        return self.endpoints[rank]

    @property
    def messages_pending(self) -> int:
        staged = len(self._staged) if self._staged is not None else 0
        return sum(len(mailbox) for mailbox in self.mailboxes) + staged

    def _check_rank(self, rank: int) -> None:
        if not 0 <= rank < self.size:
            raise InvalidArgumentError(f"Base rank should be in [0, {self.size}). Got {rank}.")

    def raw_send(self, envelope: Envelope) -> None:
        self._check_rank(envelope.dst)
        self._check_rank(envelope.src)
        with self._lock:
            self.messages_sent += 1
            self.bytes_sent += envelope.length
            self.sent_by_rank[envelope.src] += 1
            self.bytes_by_rank[envelope.src] += envelope.length
            if self._staged is not None:
                self._staged.append(envelope)
                return
        self.mailboxes[envelope.dst].deliver(envelope)

    def raw_probe(self, me: int, ctx: 'ContextId', tag: int, src: int=ANY_SOURCE,
                  accept: Optional[Callable[[int], bool]]=None) -> Optional[EnvelopeHeader]:
        """
        Header of the oldest matching envelope at `me`, left in place.
        """
        mailbox = self.mailboxes[me]
        with mailbox.condition:
            index = mailbox.find(ctx, tag, src, accept)
            return mailbox.pending[index].header if index is not None else None

    def raw_recv(self, me: int, ctx: 'ContextId', tag: int, src: int) -> Optional[Envelope]:
        """
        Remove and return the oldest envelope from `src` matching (ctx, tag), or None when not ready.
        """
        if src == ANY_SOURCE:
            raise InvalidArgumentError('raw_recv needs a concrete source rank.')
        mailbox = self.mailboxes[me]
        with mailbox.condition:
            index = mailbox.find(ctx, tag, src)
            if index is None:
                return None
            envelope = mailbox.pending.pop(index)
        with self._lock:
            self.messages_received += 1
        return envelope

    def set_staging(self, enabled: bool) -> None:
        """
        While staging, sent envelopes are held back until `flush_staged`, which
        gives drivers synchronous communication rounds.
        """
        if not enabled:
            self.flush_staged()
        with self._lock:
            self._staged = [] if enabled else None

    def flush_staged(self) -> int:
        with self._lock:
            if not self._staged:
                return 0
            staged, self._staged = self._staged, []
        for envelope in staged:
            self.mailboxes[envelope.dst].deliver(envelope)
        return len(staged)

    def abort(self) -> None:
        self.aborted = True
        for mailbox in self.mailboxes:
            with mailbox.condition:
                mailbox.condition.notify_all()


def fabric_create(p_world: int, *, debug: bool=False, strict: bool=False,
                  deadlock_timeout: float=DEFAULT_DEADLOCK_TIMEOUT) -> Fabric:
    return Fabric(p_world, debug=debug, strict=strict, deadlock_timeout=deadlock_timeout)
