import random

from Crypto.Hash import (
    SHA256 as _sha256,
)
from eth_typing import Hash32
from eth_utils import big_endian_to_int

from rbcsort.utils.ssz import encode_words


def SHA256(x: bytes) -> Hash32:
    return Hash32(_sha256.new(x).digest())


def derive_seed(*words: int) -> int:
    """
    Fold a tuple of non-negative integers into one 64-bit seed.
    """
    return big_endian_to_int(SHA256(encode_words(words))[:8])


def derive_rng(*words: int) -> random.Random:
    return random.Random(derive_seed(*words))


def schedule_digest(*words: int, length: int = 8) -> bytes:
    if not 0 < length <= 32:
        raise ValueError(f"The digest length should be in [1, 32]. Got {length}.")
    return SHA256(b'schedule' + encode_words(words))[:length]
