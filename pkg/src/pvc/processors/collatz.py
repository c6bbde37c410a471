"""Collatz step counter on arbitrary-precision integers.

Counts full iterations of n -> 3n+1 (odd) / n/2 (even) until n reaches 1.
No (3n+1)/2 shortcut: each halving is its own step, so "27" takes 111.
Values travel as decimal strings so any magnitude survives the wire.
"""

from __future__ import annotations

from typing import Any, Mapping

from . import ItemFailure, ProcessorBinding


def parse_bignat(text: Any) -> int:
    """Decimal string -> int, enforcing canonical form (no sign, no
    leading zeros except "0" itself)."""
    if not isinstance(text, str):
        raise ItemFailure(f"expected a decimal string, got {type(text).__name__}")
    if not text or not text.isdigit():
        raise ItemFailure(f"not a decimal natural: {text[:32]!r}")
    if text != "0" and text[0] == "0":
        raise ItemFailure(f"leading zeros not allowed: {text[:32]!r}")
    return int(text)


def collatz_steps(n: int) -> int:
    if n < 1:
        raise ItemFailure("collatz needs n >= 1")
    steps = 0
    while n != 1:
        if n & 1:
            n = 3 * n + 1
        else:
            n >>= 1
        steps += 1
    return steps


def apply(params: Mapping[str, Any], value: Any) -> int:
    return collatz_steps(parse_bignat(value))


def bench_input(i: int) -> str:
    # 40-digit odd numbers: big enough to exercise bignum arithmetic,
    # small enough that one item is a few microseconds.
    return str(10**39 + 2 * i + 1)


BINDING = ProcessorBinding("collatz", apply, bench_input)
