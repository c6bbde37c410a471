"""Benchmark map functions.

Every processor is a pure function of (params, value): no clocks, no
ambient randomness, no side effects.  Two workers handed the same item
must produce byte-identical results, which is what lets the coordinator
treat devices as interchangeable and lets the cross-implementation
suite compare native and browser output bit for bit.

A processor signals a bad input by raising ItemFailure; the worker turns
that into an item_error message and the coordinator records an error at
that index instead of retrying (retrying a deterministic failure would
loop forever).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping


class ItemFailure(Exception):
    """Deterministic per-item error: the value, not the worker, is bad."""


@dataclass(frozen=True)
class ProcessorBinding:
    """Registry entry: the name a TaskSpec refers to, the map function,
    and a generator of representative inputs for `pvc bench`."""

    name: str
    apply: Callable[[Mapping[str, Any], Any], Any]
    bench_input: Callable[[int], Any]


def merged(params: Mapping[str, Any], value: Any) -> dict[str, Any]:
    """Per-item fields override job params; both are plain JSON objects."""
    if not isinstance(value, Mapping):
        raise ItemFailure(f"expected an object value, got {type(value).__name__}")
    out = dict(params)
    out.update(value)
    return out


from . import blur, collatz, hashcash, randtest, raytrace  # noqa: E402

REGISTRY: dict[str, ProcessorBinding] = {
    b.name: b
    for b in (
        collatz.BINDING,
        hashcash.BINDING,
        blur.BINDING,
        raytrace.BINDING,
        randtest.BINDING,
    )
}


def get_processor(name: str) -> ProcessorBinding:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown processor: {name!r} "
                       f"(have: {', '.join(sorted(REGISTRY))})") from None
