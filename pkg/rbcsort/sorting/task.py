from dataclasses import (
    dataclass,
    field,
)
from enum import Enum
from typing import (
    List,
    NamedTuple,
)

from rbcsort.exceptions import ProtocolError
from rbcsort.runtime.comm import RangeComm
from rbcsort.sorting.capacity import SlotRange
from rbcsort.utils.constants import (
    RESERVED_TAG_BASE,
    SORT_TAG_BASE,
    SORT_TAGS_PER_LEVEL,
)
from rbcsort.utils.ssz import Element


class Side(Enum):
    SMALL = 'small'
    LARGE = 'large'


def level_tag(level: int, offset: int) -> int:
    tag = SORT_TAG_BASE + level * SORT_TAGS_PER_LEVEL + offset
    if tag >= RESERVED_TAG_BASE:
        raise ProtocolError(f"Recursion level {level} ran out of sort tags.")
    return tag


@dataclass
class SortTask:
    """
    One rank's view of a distributed recursion level. `rank` counts from the first
    rank of the sort's root group; `elems` are the rank's share of the slot range.
    """
    comm: RangeComm
    slots: SlotRange
    level: int
    rank: int
    elems: List[Element] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.elems) != self.share:
            raise ProtocolError(
                f"Rank {self.rank} holds {len(self.elems)} elements at level {self.level}, "
                f"its capacity is {self.share}."
            )

    @property
    def local_rank(self) -> int:
        return self.rank - self.slots.first

    @property
    def size(self) -> int:
        return self.slots.size

    @property
    def share(self) -> int:
        return self.slots.share(self.rank)

    @property
    def load(self) -> int:
        return self.slots.capacity.of(self.rank)

    @property
    def r(self) -> int:
        return self.slots.r

    @property
    def is_first_janus(self) -> bool:
        return self.rank == self.slots.first and self.slots.first_shared

    @property
    def is_last_janus(self) -> bool:
        return self.rank == self.slots.last and self.slots.last_shared

    def tag(self, offset: int) -> int:
        return level_tag(self.level, offset)


class LevelRecord(NamedTuple):
    """
    What one rank did at one distributed level.
    """
    level: int
    rank: int
    first: int
    last: int
    base: int
    total: int
    capacity: int
    s_total: int
    pivot_attempts: int
    posted_small: int
    posted_large: int
    received_small: int
    received_large: int
    expected_small: int
    expected_large: int
    messages_in: int

    @property
    def size(self) -> int:
        return self.last - self.first + 1

    @property
    def balanced(self) -> bool:
        return (
            self.received_small == self.expected_small
            and self.received_large == self.expected_large
            and self.received_small + self.received_large == self.capacity
        )
