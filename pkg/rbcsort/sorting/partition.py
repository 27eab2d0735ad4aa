import random
from typing import (
    Any,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

from rbcsort.exceptions import InvalidArgumentError

T = TypeVar('T')


def strict_level(level: int) -> bool:
    """
    Even levels partition with '<', odd levels with '<='.
    """
    return level % 2 == 0


def partition_local(elems: Sequence[T], pivot: T, level: int) -> Tuple[List[T], List[T]]:
    """
    Stable two-way partition around `pivot`; the comparison alternates with the recursion level
    so that runs of equal keys cannot stay on one side forever.
    """
    small: List[T] = []
    large: List[T] = []
    strict = strict_level(level)
    for elem in elems:
        is_small = elem < pivot if strict else elem <= pivot  # type: ignore
        (small if is_small else large).append(elem)
    return small, large


def select_partition(elems: Sequence[T], k: int, rng: Optional[random.Random]=None) -> Tuple[List[T], List[T]]:
    """
    Split `elems` into the k smallest and the rest, both unordered, in expected linear time.
    """
    if not 0 <= k <= len(elems):
        raise InvalidArgumentError(f"k should be in [0, {len(elems)}]. Got {k}.")
    if rng is None:
        rng = random.Random(len(elems))
    smaller: List[T] = []
    larger: List[T] = []
    current = list(elems)
    while True:
        if k == 0:
            return smaller, current + larger
        if k == len(current):
            return smaller + current, larger
        pivot: Any = current[rng.randrange(len(current))]
        lows = [elem for elem in current if elem < pivot]  # type: ignore
        equal = [elem for elem in current if elem == pivot]
        highs = [elem for elem in current if pivot < elem]
        if k < len(lows):
            larger = equal + highs + larger
            current = lows
        elif k <= len(lows) + len(equal):
            take = k - len(lows)
            return smaller + lows + equal[:take], equal[take:] + highs + larger
        else:
            smaller += lows + equal
            k -= len(lows) + len(equal)
            current = highs


def quickselect(elems: Sequence[T], k: int, rng: Optional[random.Random]=None) -> List[T]:
    return select_partition(elems, k, rng)[0]
