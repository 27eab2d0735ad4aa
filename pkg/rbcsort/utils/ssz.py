from typing import (
    Iterable,
    List as ListType,
    Optional,
    Sequence,
    Tuple,
)

from ssz import (
    decode,
    encode,
)
from ssz.sedes import (
    List,
    Serializable,
    boolean,
    uint64,
)

Words = Tuple[int, ...]
Element = Tuple[int, int]

MAX_WORDS = 2 ** 32
words_sedes = List(uint64, MAX_WORDS)


# Wire SSZ

class ContextIdData(Serializable):
    fields = [
        ('a', uint64),
        ('b', uint64),
        ('f', uint64),
        ('l', uint64),
        ('c', uint64),
    ]


class FoldPartial(Serializable):
    """
    A reduction partial split at the wrap-around point of a rotated tree:
    `high` folds ranks at or above the root, `low` folds ranks below it.
    """
    fields = [
        ('has_high', boolean),
        ('high', words_sedes),
        ('has_low', boolean),
        ('low', words_sedes),
    ]


def encode_words(words: Iterable[int]) -> bytes:
    return encode(tuple(words), words_sedes)


def decode_words(data: bytes) -> Words:
    return tuple(decode(data, words_sedes))


def encode_partial(high: Optional[Sequence[int]], low: Optional[Sequence[int]]) -> bytes:
    return encode(FoldPartial(
        has_high=high is not None,
        high=tuple(high) if high is not None else (),
        has_low=low is not None,
        low=tuple(low) if low is not None else (),
    ))


def decode_partial(data: bytes) -> Tuple[Optional[Words], Optional[Words]]:
    partial = decode(data, FoldPartial)
    high = tuple(partial.high) if partial.has_high else None
    low = tuple(partial.low) if partial.has_low else None
    return high, low


def encode_elements(elements: Iterable[Element]) -> bytes:
    return encode_words(word for element in elements for word in element)


def decode_elements(data: bytes) -> ListType[Element]:
    words = decode_words(data)
    if len(words) % 2:
        raise ValueError(f"Element payloads hold an even number of words. Got {len(words)}.")
    return list(zip(words[0::2], words[1::2]))


def encode_chunk(slot: int, elements: Iterable[Element]) -> bytes:
    """
    Elements headed for consecutive output slots, starting at `slot`.
    """
    return encode_words((slot,) + tuple(word for element in elements for word in element))


def decode_chunk(data: bytes) -> Tuple[int, ListType[Element]]:
    words = decode_words(data)
    if not words or len(words) % 2 != 1:
        raise ValueError(f"A chunk holds a slot and an even number of words. Got {len(words)} words.")
    return words[0], list(zip(words[1::2], words[2::2]))
