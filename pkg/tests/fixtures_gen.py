"""Generates the shared conformance fixtures under shared/.

The browser worker must produce bit-identical processor results and the
same protocol behavior as the native runtime; these files are the
contract both sides test against:

* shared/vectors.json — (processor, params, value, expected) tuples with
  expecteds computed by the native registry;
* shared/transcripts/*.ndjson — canonical sessions recorded from the
  native lane state machine (elapsed_ms pinned to 0), replayed by the
  browser tests frame for frame.

Run `python -m tests.fixtures_gen` to rewrite them;
tests/test_fixtures.py fails if the committed files drift from what this
module generates.
"""

from __future__ import annotations

import json
import os

from pvc.processors import REGISTRY
from pvc.protocol import (
    Bye,
    LeaseGrant,
    Ping,
    TaskSpec,
    Welcome,
    WireItem,
    decode_message,
    encode_message,
)
from pvc.worker import LaneSession

SHARED_DIR = os.path.join(os.path.dirname(__file__), "..", "shared")

VECTOR_INPUTS = [
    ("collatz", {}, "1"),
    ("collatz", {}, "6"),
    ("collatz", {}, "27"),
    ("collatz", {}, "97"),
    ("collatz", {}, "1180591620717411303424"),  # 2^70
    ("collatz", {}, "9" * 40),
    ("hashcash", {}, {"block": "hello", "difficulty": 12,
                      "nonce_start": 0, "nonce_count": 100000}),
    ("hashcash", {"block": "pvc", "difficulty": 8},
     {"nonce_start": 0, "nonce_count": 5000}),
    ("hashcash", {}, {"block": "x", "difficulty": 0,
                      "nonce_start": 77, "nonce_count": 10}),
    ("hashcash", {}, {"block": "rare", "difficulty": 24,
                      "nonce_start": 0, "nonce_count": 50}),
    ("blur", {}, {"width": 5, "height": 4, "radius": 1,
                  "pixels": [(x * 41 + y * 17) % 256
                             for y in range(4) for x in range(5)]}),
    ("blur", {"radius": 2}, {"width": 8, "height": 8,
                             "pixels": [(x * x + 3 * y) % 256
                                        for y in range(8) for x in range(8)]}),
    ("rand-test", {}, {"seed": 0, "ops": 60}),
    ("rand-test", {}, {"seed": 1, "ops": 120}),
    ("rand-test", {}, {"seed": 7, "ops": 200}),
    ("rand-test", {"ops": 90}, {"seed": 123456789}),
]


def generate_vectors() -> str:
    entries = []
    for processor, params, value in VECTOR_INPUTS:
        expected = REGISTRY[processor].apply(params, value)
        entries.append({"processor": processor, "params": params,
                        "value": value, "expected": expected})
    return json.dumps(entries, indent=1, sort_keys=True) + "\n"


def _record_session(frames_in) -> list[dict]:
    """Drive a lane session through server frames; record both sides."""
    session = LaneSession("native", 1, timer=lambda: 0.0)
    lines = [{"dir": "out", "frame": json.loads(encode_message(session.hello()))}]
    running = True
    for msg in frames_in:
        if not running:
            break
        frame = encode_message(msg)
        lines.append({"dir": "in", "frame": json.loads(frame)})
        outs, running = session.on_frame(frame)
        for reply in outs:
            lines.append({"dir": "out",
                          "frame": json.loads(encode_message(reply))})
        while session.has_work():
            lines.append({"dir": "out", "frame": json.loads(
                encode_message(session.process_one()))})
    return lines


def generate_transcripts() -> dict[str, str]:
    sessions = {
        "session-collatz": [
            Welcome("w1", TaskSpec("collatz", {}), 2),
            LeaseGrant("L0", (WireItem(0, "6"), WireItem(1, "27"))),
            Ping(t=41.5),
            LeaseGrant("L1", (WireItem(2, "1"),)),
            Bye(),
        ],
        "session-randtest": [
            Welcome("w2", TaskSpec("rand-test", {}), 2),
            LeaseGrant("L0", (WireItem(0, {"seed": 3, "ops": 50}),)),
            LeaseGrant("L1", (WireItem(1, {"seed": 4, "ops": 50}),)),
            Bye(),
        ],
        "session-errors": [
            Welcome("w3", TaskSpec("collatz", {}), 2),
            LeaseGrant("L0", (WireItem(0, "0"), WireItem(1, "5"))),
            Bye(),
        ],
        "session-unknown-processor": [
            Welcome("w4", TaskSpec("warp-drive", {}), 2),
        ],
    }
    out = {}
    for name, frames in sessions.items():
        lines = _record_session(frames)
        out[name] = "".join(
            json.dumps(line, sort_keys=True, separators=(",", ":")) + "\n"
            for line in lines)
    return out


def write_all() -> None:
    os.makedirs(os.path.join(SHARED_DIR, "transcripts"), exist_ok=True)
    with open(os.path.join(SHARED_DIR, "vectors.json"), "w") as fh:
        fh.write(generate_vectors())
    for name, content in generate_transcripts().items():
        with open(os.path.join(SHARED_DIR, "transcripts", f"{name}.ndjson"),
                  "w") as fh:
            fh.write(content)


if __name__ == "__main__":
    write_all()
    print(f"fixtures written under {os.path.abspath(SHARED_DIR)}")
