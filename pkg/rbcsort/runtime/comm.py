from abc import (
    ABC,
    abstractmethod,
)
from dataclasses import (
    dataclass,
    field,
)
from enum import Enum
from typing import (
    Dict,
    FrozenSet,
    Tuple,
)

from rbcsort.exceptions import (
    InvalidArgumentError,
    InvalidUseError,
)
from rbcsort.runtime.context import (
    ContextId,
    derive_range_ctx,
)
from rbcsort.runtime.transport import (
    Endpoint,
    Fabric,
)
from rbcsort.runtime.workers import bound_rank


class CommMode(Enum):
    TAG_SCOPED = 'tag'
    CONTEXT_SCOPED = 'ctx'


class Comm(ABC):
    """
    A group of base ranks plus the context its traffic is matched in.
    Handles are immutable and hold no rank identity; the caller's rank comes from the worker binding.
    """
    fabric: Fabric
    ctx: ContextId
    mode: CommMode

    @property
    @abstractmethod
    def size(self) -> int:
        ...

    @abstractmethod
    def base_rank(self, local: int) -> int:
        ...

    @abstractmethod
    def local_rank(self, base: int) -> int:
        ...

    @abstractmethod
    def is_member(self, base: int) -> bool:
        ...

    @property
    def members(self) -> Tuple[int, ...]:
        return tuple(self.base_rank(local) for local in range(self.size))

    @property
    def member_set(self) -> FrozenSet[int]:
        return frozenset(self.members)

    def endpoint(self) -> Endpoint:
        return self.fabric.endpoint(bound_rank())

    def rank(self) -> int:
        """
        Local rank of the calling worker.
        """
        me = bound_rank()
        if not self.is_member(me):
            raise InvalidUseError(f"Base rank {me} is not a member of this communicator.")
        return self.local_rank(me)

    def _check_local(self, local: int) -> None:
        if not 0 <= local < self.size:
            raise InvalidArgumentError(f"Local rank should be in [0, {self.size}). Got {local}.")


@dataclass(frozen=True)
class RangeComm(Comm):
    fabric: Fabric = field(compare=False, repr=False)
    first: int
    last: int
    stride: int
    ctx: ContextId
    mode: CommMode

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise InvalidArgumentError(f"Stride should be positive. Got {self.stride}.")
        if not 0 <= self.first <= self.last < self.fabric.size:
            raise InvalidArgumentError(
                f"Range should satisfy 0 <= {self.first} <= {self.last} < {self.fabric.size}."
            )

    @property
    def size(self) -> int:
        return (self.last - self.first) // self.stride + 1

    def base_rank(self, local: int) -> int:
        self._check_local(local)
        return self.first + local * self.stride

    def local_rank(self, base: int) -> int:
        if not self.is_member(base):
            raise InvalidArgumentError(f"Base rank {base} is not a member of {self}.")
        return (base - self.first) // self.stride

    def is_member(self, base: int) -> bool:
        return self.first <= base <= self.last and (base - self.first) % self.stride == 0

    @property
    def members(self) -> Tuple[int, ...]:
        return tuple(range(self.first, self.first + self.size * self.stride, self.stride))


@dataclass(frozen=True)
class GroupComm(Comm):
    """
    A communicator over an explicit rank table, produced by the leader path of group creation.
    """
    fabric: Fabric = field(compare=False, repr=False)
    ranks: Tuple[int, ...]
    ctx: ContextId
    mode: CommMode = CommMode.CONTEXT_SCOPED
    _index: Dict[int, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.ranks:
            raise InvalidArgumentError('A group communicator needs at least one rank.')
        for position, base in enumerate(self.ranks):
            if not 0 <= base < self.fabric.size:
                raise InvalidArgumentError(f"Base rank should be in [0, {self.fabric.size}). Got {base}.")
            self._index[base] = position
        if len(self._index) != len(self.ranks):
            raise InvalidArgumentError(f"Group ranks should be unique. Got {self.ranks}.")

    @property
    def size(self) -> int:
        return len(self.ranks)

    def base_rank(self, local: int) -> int:
        self._check_local(local)
        return self.ranks[local]

    def local_rank(self, base: int) -> int:
        if base not in self._index:
            raise InvalidArgumentError(f"Base rank {base} is not a member of {self}.")
        return self._index[base]

    def is_member(self, base: int) -> bool:
        return base in self._index

    @property
    def members(self) -> Tuple[int, ...]:
        return self.ranks


def create_from_world(fabric: Fabric, mode: CommMode=CommMode.TAG_SCOPED) -> RangeComm:
    return RangeComm(
        fabric=fabric,
        first=0,
        last=fabric.size - 1,
        stride=1,
        ctx=ContextId(a=0, b=0, f=0, l=fabric.size - 1, c=0),
        mode=mode,
    )


def split_range(parent: Comm, first: int, last: int, stride: int=1) -> RangeComm:
    """
    Sub-communicator of parent-local ranks first, first + stride, ..., up to last.
    Pure arithmetic: any rank may call it, no message is sent.
    """
    if not isinstance(parent, RangeComm):
        raise InvalidUseError('Only range communicators can be split locally; use icomm_create_group.')
    if not 0 <= first <= last < parent.size:
        raise InvalidArgumentError(f"Split bounds should satisfy 0 <= {first} <= {last} < {parent.size}.")
    if stride < 1:
        raise InvalidArgumentError(f"Stride should be positive. Got {stride}.")
    if parent.mode is CommMode.CONTEXT_SCOPED:
        if stride != 1:
            raise InvalidUseError('Context-scoped communicators can only be split into contiguous ranges.')
        ctx = derive_range_ctx(parent.ctx, first, last)
    else:
        ctx = parent.ctx
    return RangeComm(
        fabric=parent.fabric,
        first=parent.first + first * parent.stride,
        last=parent.first + last * parent.stride,
        stride=parent.stride * stride,
        ctx=ctx,
        mode=parent.mode,
    )


def translate_rank(comm: Comm, local: int) -> int:
    return comm.base_rank(local)


def translate_base(comm: Comm, base: int) -> int:
    return comm.local_rank(base)


def comm_size(comm: Comm) -> int:
    return comm.size


def comm_rank(comm: Comm, me: int) -> int:
    return comm.local_rank(me)
