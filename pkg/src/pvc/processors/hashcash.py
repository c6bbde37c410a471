"""Hashcash-style proof-of-work search.

Scans a nonce range for the smallest nonce whose SHA-256 digest of
UTF-8(block) || UTF-8(decimal nonce) starts with at least `difficulty`
zero bits.  Difficulty counts bits, not hex digits, so the work factor
doubles per unit.  Returns None when the range holds no solution, which
is a normal outcome, not an error: the coordinator's stream carries one
range per item and most ranges are empty at realistic difficulties.
"""

from __future__ import annotations

import hashlib
from typing import Any, Mapping, Optional

from . import ItemFailure, ProcessorBinding, merged


def leading_zero_bits(digest: bytes) -> int:
    return len(digest) * 8 - int.from_bytes(digest, "big").bit_length()


def hashcash_search(block: str, difficulty: int, nonce_start: int,
                    nonce_count: int) -> Optional[int]:
    if not 0 <= difficulty <= 256:
        raise ItemFailure("difficulty must be in 0..256")
    if nonce_start < 0:
        raise ItemFailure("nonce_start must be >= 0")
    if nonce_count < 1:
        raise ItemFailure("nonce_count must be >= 1")
    prefix = block.encode("utf-8")
    bound = 1 << (256 - difficulty)
    for nonce in range(nonce_start, nonce_start + nonce_count):
        digest = hashlib.sha256(prefix + str(nonce).encode("ascii")).digest()
        if int.from_bytes(digest, "big") < bound:
            return nonce
    return None


def apply(params: Mapping[str, Any], value: Any) -> Optional[int]:
    fields = merged(params, value)
    try:
        block = fields["block"]
        difficulty = fields["difficulty"]
        nonce_start = fields["nonce_start"]
        nonce_count = fields["nonce_count"]
    except KeyError as exc:
        raise ItemFailure(f"missing field: {exc.args[0]}") from None
    if not isinstance(block, str):
        raise ItemFailure("block must be a string")
    for name, v in (("difficulty", difficulty), ("nonce_start", nonce_start),
                    ("nonce_count", nonce_count)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ItemFailure(f"{name} must be an integer")
    return hashcash_search(block, difficulty, nonce_start, nonce_count)


def bench_input(i: int) -> dict:
    return {"block": "bench", "difficulty": 12,
            "nonce_start": i * 4096, "nonce_count": 4096}


BINDING = ProcessorBinding("hashcash", apply, bench_input)
