from collections import Counter
from typing import (
    Iterable,
    Sequence,
)

from eth_utils.toolz import sliding_window

from rbcsort.exceptions import ValidationError
from rbcsort.sorting.capacity import Capacity
from rbcsort.sorting.task import LevelRecord
from rbcsort.utils.constants import SPLITS_PER_REPETITION


def verify_sorted(outputs: Sequence[Sequence[int]]) -> bool:
    """
    Concatenated by rank, the outputs are non-decreasing.
    """
    keys = [key for output in outputs for key in output]
    return all(left <= right for left, right in sliding_window(2, keys))


def verify_multiset(inputs: Sequence[Sequence[int]], outputs: Sequence[Sequence[int]]) -> bool:
    return Counter(key for keys in inputs for key in keys) == Counter(key for keys in outputs for key in keys)


def verify_balance(outputs: Sequence[Sequence[int]]) -> bool:
    n = sum(len(output) for output in outputs)
    if n == 0:
        return True
    capacity = Capacity.for_input(n, len(outputs))
    return all(
        len(output) == (capacity.of(rank) if rank < capacity.p else 0)
        for rank, output in enumerate(outputs)
    )


def verify_level_balance(trace: Iterable[LevelRecord]) -> bool:
    return all(record.balanced for record in trace)


def verify_message_bounds(trace: Iterable[LevelRecord]) -> bool:
    """
    At every level each source posts at most two data messages per side, and each rank
    receives at most min(p, n/p) + 2, with p the group size and n/p the rank's slot share.
    """
    return all(
        record.posted_small <= 2 and record.posted_large <= 2
        and record.messages_in <= min(record.size, record.capacity) + 2
        for record in trace
    )


def validate_bench_size(p: int, n_per_p: int) -> None:
    if p < 1:
        raise ValidationError(f"The number of ranks should be at least 1. Got {p}.")
    if p > 1024:
        raise ValidationError(f"At most 1024 ranks are simulated. Got {p}.")
    if n_per_p < 0:
        raise ValidationError(f"The number of elements per rank should not be negative. Got {n_per_p}.")


def validate_split_rate(wall_ns: Sequence[int], tolerance: float=3.0) -> bool:
    """
    Mean split times of several communicator sizes lie within `tolerance` of each other.
    """
    means = [total / SPLITS_PER_REPETITION for total in wall_ns]
    return max(means) <= tolerance * min(means)
