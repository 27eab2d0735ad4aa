import logging
from typing import (
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from ssz import (
    decode,
    encode,
)

from rbcsort.exceptions import (
    InvalidArgumentError,
    InvalidUseError,
)
from rbcsort.runtime.collectives import BcastRequest
from rbcsort.runtime.comm import (
    Comm,
    CommMode,
    GroupComm,
    RangeComm,
)
from rbcsort.runtime.context import (
    ContextId,
    derive_range_ctx,
)
from rbcsort.runtime.p2p import (
    Request,
    check_user_tag,
    wait,
)
from rbcsort.utils.ssz import ContextIdData

logger = logging.getLogger(__name__)


class RangeGroup(NamedTuple):
    first: int
    last: int


class ExplicitGroup(NamedTuple):
    ranks: Tuple[int, ...]


GroupSpec = Union[RangeGroup, ExplicitGroup]


def encode_context_id(ctx: ContextId) -> bytes:
    return encode(ContextIdData(**ctx._asdict()))


def decode_context_id(data: bytes) -> ContextId:
    value = decode(data, ContextIdData)
    return ContextId(a=value.a, b=value.b, f=value.f, l=value.l, c=value.c)


def group_ranks(group: GroupSpec, parent_size: int) -> Tuple[int, ...]:
    """
    Parent-local ranks of the group, ascending.
    """
    if isinstance(group, RangeGroup):
        if not 0 <= group.first <= group.last < parent_size:
            raise InvalidArgumentError(
                f"Group range should satisfy 0 <= {group.first} <= {group.last} < {parent_size}."
            )
        return tuple(range(group.first, group.last + 1))
    ranks = tuple(group.ranks)
    if not ranks:
        raise InvalidArgumentError('A group needs at least one rank.')
    if any(later <= earlier for earlier, later in zip(ranks, ranks[1:])):
        raise InvalidArgumentError(f"Group ranks should be ascending and duplicate-free. Got {ranks}.")
    if ranks[0] < 0 or ranks[-1] >= parent_size:
        raise InvalidArgumentError(f"Group ranks should lie in [0, {parent_size}). Got {ranks}.")
    return ranks


def tracks_range(parent: Comm) -> bool:
    """
    Whether the parent's context describes its own base-rank range, which the local derivation relies on.
    """
    return (
        isinstance(parent, RangeComm)
        and parent.stride == 1
        and (parent.ctx.f, parent.ctx.l) == (parent.first, parent.last)
    )


class CreateGroupRequest(Request):
    """
    Nonblocking communicator creation. Contiguous ranges of a range-tracking parent are derived
    locally; any other group gets a fresh context from its first member, broadcast with the user tag.
    """
    def __init__(self, parent: Comm, group: GroupSpec, tag: int) -> None:
        check_user_tag(tag)
        ranks = group_ranks(group, parent.size)
        me = parent.rank()
        if me not in ranks:
            raise InvalidUseError(f"Local rank {me} called group creation for a group it is not part of.")
        super().__init__(parent.endpoint())
        self.parent = parent
        self.ranks = ranks
        self.tag = tag
        self._bcast: Optional[BcastRequest] = None
        if isinstance(group, RangeGroup) and tracks_range(parent):
            self._range_path(group)
        else:
            self._leader_path(me)

    @property
    def local(self) -> bool:
        return self._bcast is None

    def _range_path(self, group: RangeGroup) -> None:
        parent = self.parent
        ctx = derive_range_ctx(parent.ctx, group.first, group.last)
        self._result = RangeComm(
            fabric=parent.fabric,
            first=parent.base_rank(group.first),
            last=parent.base_rank(group.last),
            stride=1,
            ctx=ctx,
            mode=CommMode.CONTEXT_SCOPED,
        )

    def _leader_path(self, me: int) -> None:
        parent = self.parent
        bases = tuple(parent.base_rank(rank) for rank in self.ranks)
        messenger = GroupComm(fabric=parent.fabric, ranks=bases, ctx=parent.ctx, mode=parent.mode)
        payload = None
        if me == self.ranks[0]:
            ctx = ContextId(
                a=self.endpoint.rank,
                b=self.endpoint.next_leader_counter(),
                f=0,
                l=len(bases),
                c=0,
            )
            logger.debug('Rank %d leads group creation of %d ranks with context %s', self.endpoint.rank,
                         len(bases), ctx)
            payload = encode_context_id(ctx)
        self._bases = bases
        self._bcast = BcastRequest(messenger, 0, payload, self.tag, decode=decode_context_id)

    def _progress(self) -> None:
        if self._bcast is None:
            self._finish(self._result)
            return
        if self._bcast.test():
            comm = GroupComm(fabric=self.parent.fabric, ranks=self._bases, ctx=self._bcast.result)
            self._finish(comm)


def icomm_create_group(parent: Comm, group: GroupSpec, tag: int) -> CreateGroupRequest:
    return CreateGroupRequest(parent, group, tag)


def comm_create_group(parent: Comm, group: GroupSpec, tag: int) -> Comm:
    return wait(icomm_create_group(parent, group, tag))


def explicit(ranks: Sequence[int]) -> ExplicitGroup:
    return ExplicitGroup(ranks=tuple(ranks))
