from typing import (
    TYPE_CHECKING,
    Dict,
    FrozenSet,
    Iterable,
    NamedTuple,
)

from rbcsort.exceptions import InvalidArgumentError

if TYPE_CHECKING:
    from rbcsort.runtime.comm import Comm  # noqa: F401


class ContextId(NamedTuple):
    """
    <a, b, f, l, c>: leader base rank, leader counter, first and last offset of the range, generation.
    """
    a: int
    b: int
    f: int
    l: int  # noqa: E741
    c: int


def derive_range_ctx(parent_ctx: ContextId, first: int, last: int) -> ContextId:
    """
    Context of the sub-range [first, last] (offsets relative to the parent range), computed locally.
    """
    if not 0 <= first <= last <= parent_ctx.l - parent_ctx.f:
        raise InvalidArgumentError(
            f"Range offsets should satisfy 0 <= {first} <= {last} <= {parent_ctx.l - parent_ctx.f}."
        )
    return ContextId(
        a=parent_ctx.a,
        b=parent_ctx.b,
        f=parent_ctx.f + first,
        l=parent_ctx.f + last,
        c=parent_ctx.c + 1,
    )


def ctx_registry_check(live_comms: Iterable['Comm']) -> bool:
    """
    True iff no two distinct communicators share a context id.
    Handles of one communicator held by several ranks count once.
    """
    seen: Dict[ContextId, FrozenSet[int]] = {}
    for comm in live_comms:
        members = comm.member_set
        known = seen.setdefault(comm.ctx, members)
        if known != members:
            return False
    return True
