from dataclasses import dataclass
from typing import (
    NamedTuple,
    Optional,
    Tuple,
)

from rbcsort.exceptions import InvalidArgumentError


class Capacity(NamedTuple):
    """
    Target load of every rank of a group of `p` ranks sharing `n` elements:
    the first n mod p ranks hold one element more than the rest.
    Slot j (0 <= j < n) is the j-th position of the globally sorted output.
    """
    n: int
    p: int

    @classmethod
    def for_input(cls, n: int, p: int) -> 'Capacity':
        if n < 0 or p < 1:
            raise InvalidArgumentError(f"Need n >= 0 and p >= 1. Got n={n}, p={p}.")
        return cls(n=n, p=max(1, min(n, p)))

    @property
    def load(self) -> int:
        return self.n // self.p

    def of(self, rank: int) -> int:
        self._check_rank(rank)
        return self.load + (1 if rank < self.n % self.p else 0)

    def prefix(self, rank: int) -> int:
        """
        First slot owned by `rank`.
        """
        self._check_rank(rank)
        return rank * self.load + min(rank, self.n % self.p)

    def owner(self, slot: int) -> int:
        if not 0 <= slot < self.n:
            raise InvalidArgumentError(f"Slot should be in [0, {self.n}). Got {slot}.")
        remainder = self.n % self.p
        wide = remainder * (self.load + 1)
        if slot < wide:
            return slot // (self.load + 1)
        return remainder + (slot - wide) // self.load

    def _check_rank(self, rank: int) -> None:
        if not 0 <= rank < self.p:
            raise InvalidArgumentError(f"Rank should be in [0, {self.p}). Got {rank}.")


@dataclass(frozen=True)
class SlotRange:
    """
    The contiguous output slots [base, base + total) a sort task is responsible for,
    and through the capacity map, the ranks holding them.
    """
    capacity: Capacity
    base: int
    total: int

    def __post_init__(self) -> None:
        if self.total < 1 or self.base < 0 or self.end > self.capacity.n:
            raise InvalidArgumentError(
                f"Slot range [{self.base}, {self.end}) should be nonempty and inside [0, {self.capacity.n})."
            )

    @property
    def end(self) -> int:
        return self.base + self.total

    @property
    def first(self) -> int:
        return self.capacity.owner(self.base)

    @property
    def last(self) -> int:
        return self.capacity.owner(self.end - 1)

    @property
    def size(self) -> int:
        return self.last - self.first + 1

    @property
    def ranks(self) -> range:
        return range(self.first, self.last + 1)

    def contains(self, rank: int) -> bool:
        return self.first <= rank <= self.last

    def start(self, rank: int) -> int:
        return max(self.base, self.capacity.prefix(rank))

    def share(self, rank: int) -> int:
        """
        Number of this range's slots owned by `rank`; zero for ranks outside the range.
        """
        if not 0 <= rank < self.capacity.p:
            return 0
        stop = min(self.end, self.capacity.prefix(rank) + self.capacity.of(rank))
        return max(0, stop - self.start(rank))

    def offset(self, rank: int) -> int:
        """
        Slots of this range held by ranks before `rank`.
        """
        return self.start(rank) - self.base

    @property
    def r(self) -> int:
        # Remaining load of the first rank
        return self.share(self.first)

    @property
    def first_shared(self) -> bool:
        return self.share(self.first) < self.capacity.of(self.first)

    @property
    def last_shared(self) -> bool:
        return self.share(self.last) < self.capacity.of(self.last)

    def split(self, small: int) -> Tuple['SlotRange', 'SlotRange']:
        if not 0 < small < self.total:
            raise InvalidArgumentError(f"A split needs 0 < {small} < {self.total}.")
        left = SlotRange(self.capacity, self.base, small)
        right = SlotRange(self.capacity, self.base + small, self.total - small)
        return left, right


def remaining_load(load: int, s_total: int, r: int) -> int:
    """
    First-rank load of the right group for uniform capacities: load - (load + s_total - r) mod load.
    """
    return load - (load + s_total - r) % load


def janus_of(left: SlotRange, right: SlotRange) -> Optional[int]:
    if left.last == right.first:
        return left.last
    return None
