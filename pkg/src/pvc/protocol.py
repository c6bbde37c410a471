"""Wire protocol between the coordinator and its workers.

One message per WebSocket text frame, encoded as a single-line JSON
object whose "type" field names the variant.  The same encoding is used
for transcript logs (newline-delimited), which is what the browser
worker's conformance suite replays.

Decoding is strict: unknown types, missing or extra fields, wrong types
and bad signs are all rejected with an error naming the offending field.
A coordinator treats any such frame as fatal for that connection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Union


class ProtocolError(ValueError):
    """A frame that does not decode to exactly one valid message."""

    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(message)
        self.field = field_name


@dataclass(frozen=True)
class TaskSpec:
    """Names the map function workers must apply, plus its fixed
    parameters; immutable for the lifetime of a job."""

    processor: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WireItem:
    index: int
    value: Any


@dataclass(frozen=True)
class Hello:
    agent: str
    cores: int
    worker_id: str | None = None


@dataclass(frozen=True)
class Welcome:
    worker_id: str
    task: TaskSpec
    window: int


@dataclass(frozen=True)
class LeaseGrant:
    lease_id: str
    items: tuple[WireItem, ...]


@dataclass(frozen=True)
class Result:
    lease_id: str
    index: int
    value: Any
    elapsed_ms: float


@dataclass(frozen=True)
class ItemError:
    lease_id: str
    index: int
    message: str


@dataclass(frozen=True)
class Ping:
    t: float


@dataclass(frozen=True)
class Pong:
    t: float


@dataclass(frozen=True)
class Bye:
    pass


Message = Union[Hello, Welcome, LeaseGrant, Result, ItemError, Ping, Pong, Bye]

_TAGS = {
    Hello: "hello",
    Welcome: "welcome",
    LeaseGrant: "lease",
    Result: "result",
    ItemError: "item_error",
    Ping: "ping",
    Pong: "pong",
    Bye: "bye",
}


def encode_message(m: Message) -> str:
    """Encode to one single-line JSON object; decode(encode(m)) == m."""
    tag = _TAGS.get(type(m))
    if tag is None:
        raise ProtocolError(f"not a protocol message: {type(m).__name__}")
    obj: dict[str, Any] = {"type": tag}
    if isinstance(m, Hello):
        obj["agent"] = m.agent
        obj["cores"] = m.cores
        if m.worker_id is not None:
            obj["worker_id"] = m.worker_id
    elif isinstance(m, Welcome):
        obj["worker_id"] = m.worker_id
        obj["task"] = {"processor": m.task.processor, "params": m.task.params}
        obj["window"] = m.window
    elif isinstance(m, LeaseGrant):
        obj["lease_id"] = m.lease_id
        obj["items"] = [{"index": it.index, "value": it.value} for it in m.items]
    elif isinstance(m, Result):
        obj["lease_id"] = m.lease_id
        obj["index"] = m.index
        obj["value"] = m.value
        obj["elapsed_ms"] = m.elapsed_ms
    elif isinstance(m, ItemError):
        obj["lease_id"] = m.lease_id
        obj["index"] = m.index
        obj["message"] = m.message
    elif isinstance(m, (Ping, Pong)):
        obj["t"] = m.t
    return json.dumps(obj, separators=(",", ":"))


def decode_message(frame: str) -> Message:
    """Decode one frame; raises ProtocolError on anything malformed."""
    try:
        obj = json.loads(frame)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ProtocolError(f"malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("frame is not a JSON object")
    tag = obj.get("type")
    if tag is None:
        raise ProtocolError("missing field: type", "type")
    decoder = _DECODERS.get(tag)
    if decoder is None:
        raise ProtocolError(f"unknown message type: {tag!r}", "type")
    return decoder(obj)


def _check_fields(obj: dict, required: tuple[str, ...],
                  optional: tuple[str, ...] = ()) -> None:
    for name in required:
        if name not in obj:
            raise ProtocolError(f"missing field: {name}", name)
    allowed = set(required) | set(optional) | {"type"}
    for name in obj:
        if name not in allowed:
            raise ProtocolError(f"unexpected field: {name}", name)


def _as_str(obj: dict, name: str) -> str:
    v = obj[name]
    if not isinstance(v, str):
        raise ProtocolError(f"field {name} must be a string", name)
    return v


def _as_int(obj: dict, name: str, minimum: int) -> int:
    v = obj[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ProtocolError(f"field {name} must be an integer", name)
    if v < minimum:
        raise ProtocolError(f"field {name} must be >= {minimum}", name)
    return v


def _as_number(obj: dict, name: str, minimum: float) -> float:
    v = obj[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProtocolError(f"field {name} must be a number", name)
    if v < minimum:
        raise ProtocolError(f"field {name} must be >= {minimum}", name)
    return v


def _decode_hello(obj: dict) -> Hello:
    _check_fields(obj, ("agent", "cores"), ("worker_id",))
    worker_id = None
    if "worker_id" in obj:
        worker_id = _as_str(obj, "worker_id")
    return Hello(agent=_as_str(obj, "agent"),
                 cores=_as_int(obj, "cores", 1),
                 worker_id=worker_id)


def _decode_welcome(obj: dict) -> Welcome:
    _check_fields(obj, ("worker_id", "task", "window"))
    task = obj["task"]
    if not isinstance(task, dict):
        raise ProtocolError("field task must be an object", "task")
    if set(task) != {"processor", "params"}:
        raise ProtocolError("field task must have processor and params", "task")
    if not isinstance(task["processor"], str) or not task["processor"]:
        raise ProtocolError("field task.processor must be a non-empty string",
                            "task.processor")
    if not isinstance(task["params"], dict):
        raise ProtocolError("field task.params must be an object", "task.params")
    return Welcome(worker_id=_as_str(obj, "worker_id"),
                   task=TaskSpec(task["processor"], task["params"]),
                   window=_as_int(obj, "window", 1))


def _decode_lease(obj: dict) -> LeaseGrant:
    _check_fields(obj, ("lease_id", "items"))
    raw = obj["items"]
    if not isinstance(raw, list) or not raw:
        raise ProtocolError("field items must be a non-empty array", "items")
    items = []
    for entry in raw:
        if not isinstance(entry, dict) or set(entry) != {"index", "value"}:
            raise ProtocolError("lease items must be {index, value} objects",
                                "items")
        items.append(WireItem(_as_int(entry, "index", 0), entry["value"]))
    return LeaseGrant(lease_id=_as_str(obj, "lease_id"), items=tuple(items))


def _decode_result(obj: dict) -> Result:
    _check_fields(obj, ("lease_id", "index", "value", "elapsed_ms"))
    return Result(lease_id=_as_str(obj, "lease_id"),
                  index=_as_int(obj, "index", 0),
                  value=obj["value"],
                  elapsed_ms=_as_number(obj, "elapsed_ms", 0))


def _decode_item_error(obj: dict) -> ItemError:
    _check_fields(obj, ("lease_id", "index", "message"))
    return ItemError(lease_id=_as_str(obj, "lease_id"),
                     index=_as_int(obj, "index", 0),
                     message=_as_str(obj, "message"))


def _decode_ping(obj: dict) -> Ping:
    _check_fields(obj, ("t",))
    return Ping(t=_as_number(obj, "t", 0))


def _decode_pong(obj: dict) -> Pong:
    _check_fields(obj, ("t",))
    return Pong(t=_as_number(obj, "t", 0))


def _decode_bye(obj: dict) -> Bye:
    _check_fields(obj, ())
    return Bye()


_DECODERS = {
    "hello": _decode_hello,
    "welcome": _decode_welcome,
    "lease": _decode_lease,
    "result": _decode_result,
    "item_error": _decode_item_error,
    "ping": _decode_ping,
    "pong": _decode_pong,
    "bye": _decode_bye,
}
