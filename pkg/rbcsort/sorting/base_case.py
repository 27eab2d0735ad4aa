from typing import (
    List,
    Tuple,
)

from rbcsort.exceptions import ProtocolError
from rbcsort.runtime.comm import Comm
from rbcsort.runtime.p2p import (
    post_recv,
    post_send,
    wait_for,
)
from rbcsort.runtime.workers import Program
from rbcsort.sorting.capacity import SlotRange
from rbcsort.sorting.partition import select_partition
from rbcsort.utils.constants import BASE_CASE_TAG
from rbcsort.utils.ssz import (
    Element,
    decode_elements,
    encode_elements,
)


def split_pair(union: List[Element], left_capacity: int) -> Tuple[List[Element], List[Element]]:
    smallest, rest = select_partition(union, left_capacity)
    return sorted(smallest), sorted(rest)


def base_case(comm: Comm, slots: SlotRange, rank: int, elems: List[Element]) -> Program[List[Element]]:
    """
    One rank sorts locally. Two ranks swap their whole data; the left one keeps the
    smallest elements up to its capacity, the right one the rest.
    """
    if slots.size == 1:
        return sorted(elems)
    if slots.size != 2:
        raise ProtocolError(f"Base cases span one or two ranks, not {slots.size}.")
    local = rank - slots.first
    other = 1 - local
    post_send(comm, other, BASE_CASE_TAG, encode_elements(elems))
    theirs = decode_elements((yield from wait_for(post_recv(comm, other, BASE_CASE_TAG))))
    union = elems + theirs
    if len(union) != slots.total:
        raise ProtocolError(f"Base case on ranks {slots.first}-{slots.last} holds {len(union)} of {slots.total}.")
    left, right = split_pair(union, slots.share(slots.first))
    return left if local == 0 else right
