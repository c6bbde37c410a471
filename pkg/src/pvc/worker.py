"""Native worker: joins a master over WebSocket and processes leases.

A worker runs one or more lanes.  Each lane is an independent sequential
protocol session (hello, welcome, leases in, results out, pongs) with
its own connection; parallelism on a multi-core host comes from running
one lane per core as separate OS processes, never from threads inside a
lane.  That keeps per-session ordering trivial: for a lease of s items a
lane emits exactly s result/item_error frames, in lease order.

LaneSession is the transport-free protocol state machine; run_lane wires
it to a blocking WebSocket client, answering pings promptly while idle
and between items while busy.
"""

from __future__ import annotations

import multiprocessing
import time
from collections import deque
from dataclasses import dataclass
from typing import Any, Optional

from .processors import ItemFailure, ProcessorBinding, REGISTRY
from .protocol import (
    Bye,
    Hello,
    ItemError,
    LeaseGrant,
    Message,
    Ping,
    Pong,
    ProtocolError,
    Result,
    TaskSpec,
    Welcome,
    decode_message,
    encode_message,
)


@dataclass
class WorkerConfig:
    master_url: str
    lanes: int = 1
    label: str = "native"

    def __post_init__(self):
        if self.lanes < 1:
            raise ValueError("lanes must be >= 1")


class UnknownProcessor(RuntimeError):
    pass


def process_item(task: TaskSpec, value: Any) -> Any:
    """Apply the named processor; ItemFailure propagates, unknown
    processor names are fatal configuration errors."""
    binding = REGISTRY.get(task.processor)
    if binding is None:
        raise UnknownProcessor(task.processor)
    return binding.apply(task.params, value)


@dataclass
class SessionSummary:
    items: int = 0
    busy_ms: float = 0.0
    ok: bool = True
    reason: str = ""


class LaneSession:
    """One connection's protocol state: feed it inbound frames, let it
    process queued items, send what it returns."""

    def __init__(self, agent: str, cores: int, timer=time.perf_counter):
        self.agent = agent
        self.cores = cores
        self.timer = timer
        self.state = "connecting"
        self.task: Optional[TaskSpec] = None
        self.binding: Optional[ProcessorBinding] = None
        self.window = 0
        self.worker_id: Optional[str] = None
        self.queue: deque[tuple[str, int, Any]] = deque()
        self.summary = SessionSummary()

    def hello(self) -> Hello:
        return Hello(agent=self.agent, cores=self.cores)

    def on_frame(self, frame: str) -> tuple[list[Message], bool]:
        """Returns (messages to send, keep_running)."""
        msg = decode_message(frame)
        if isinstance(msg, Welcome):
            if self.state != "connecting":
                raise ProtocolError("unexpected second welcome")
            self.worker_id = msg.worker_id
            self.task = msg.task
            self.window = msg.window
            self.binding = REGISTRY.get(msg.task.processor)
            if self.binding is None:
                self.state = "closed"
                self.summary.ok = False
                self.summary.reason = f"unknown processor: {msg.task.processor}"
                return [Bye()], False
            self.state = "working"
            return [], True
        if isinstance(msg, LeaseGrant):
            if self.state != "working":
                raise ProtocolError("lease before welcome")
            self.queue.extend(
                (msg.lease_id, item.index, item.value) for item in msg.items)
            return [], True
        if isinstance(msg, Ping):
            return [Pong(t=msg.t)], True
        if isinstance(msg, Bye):
            self.state = "closed"
            return [], False
        raise ProtocolError(f"unexpected message: {type(msg).__name__}")

    def has_work(self) -> bool:
        return bool(self.queue)

    def process_one(self) -> Message:
        lease_id, index, value = self.queue.popleft()
        start = self.timer()
        try:
            out = self.binding.apply(self.task.params, value)
        except ItemFailure as exc:
            self.summary.items += 1
            return ItemError(lease_id=lease_id, index=index, message=str(exc))
        except Exception as exc:  # deterministic given the value: report it
            self.summary.items += 1
            return ItemError(lease_id=lease_id, index=index,
                             message=f"{type(exc).__name__}: {exc}")
        elapsed_ms = (self.timer() - start) * 1000.0
        self.summary.items += 1
        self.summary.busy_ms += elapsed_ms
        return Result(lease_id=lease_id, index=index, value=out,
                      elapsed_ms=round(elapsed_ms, 3))


def run_lane(url: str, agent: str, cores: int) -> SessionSummary:
    """One blocking protocol session against a live master."""
    from websockets.exceptions import ConnectionClosed, ConnectionClosedOK
    from websockets.sync.client import connect

    session = LaneSession(agent, cores)
    try:
        conn = connect(url, open_timeout=10)
    except Exception as exc:
        return SessionSummary(ok=False, reason=f"connect failed: {exc}")

    def send_all(messages) -> None:
        for msg in messages:
            conn.send(encode_message(msg))

    clean = False
    try:
        send_all([session.hello()])
        running = True
        while running:
            # drain whatever already arrived without blocking
            while running:
                try:
                    frame = conn.recv(timeout=0)
                except TimeoutError:
                    break
                out, running = session.on_frame(frame)
                send_all(out)
            if not running:
                clean = True
                break
            if session.has_work():
                send_all([session.process_one()])
            else:
                try:
                    frame = conn.recv(timeout=0.25)
                except TimeoutError:
                    continue
                out, running = session.on_frame(frame)
                send_all(out)
                if not running:
                    clean = True
    except ConnectionClosedOK:
        clean = True
    except ConnectionClosed as exc:
        session.summary.ok = False
        session.summary.reason = f"connection lost: {exc}"
    except ProtocolError as exc:
        session.summary.ok = False
        session.summary.reason = f"protocol error: {exc}"
    finally:
        try:
            conn.close()
        except Exception:
            pass
    if not clean and session.summary.ok and not session.summary.reason:
        session.summary.reason = "connection lost"
        session.summary.ok = False
    return session.summary


def _lane_entry(url: str, agent: str, cores: int, out_queue) -> None:
    summary = run_lane(url, agent, cores)
    out_queue.put((summary.items, summary.busy_ms, summary.ok, summary.reason))


def run_worker(cfg: WorkerConfig) -> SessionSummary:
    """Run cfg.lanes independent sessions; one process per lane so a
    CPU-bound processor actually uses the cores."""
    if cfg.lanes == 1:
        return run_lane(cfg.master_url, cfg.label, 1)
    # fork keeps lane startup independent of how the parent was launched
    ctx = multiprocessing.get_context("fork")
    out_queue = ctx.Queue()
    procs = [ctx.Process(target=_lane_entry,
                         args=(cfg.master_url, cfg.label, cfg.lanes, out_queue),
                         daemon=True)
             for _ in range(cfg.lanes)]
    for proc in procs:
        proc.start()
    for proc in procs:
        proc.join()
    total = SessionSummary()
    reasons = []
    reported = 0
    while not out_queue.empty():
        items, busy_ms, ok, reason = out_queue.get()
        reported += 1
        total.items += items
        total.busy_ms += busy_ms
        total.ok = total.ok and ok
        if reason:
            reasons.append(reason)
    if reported < len(procs):
        total.ok = False
        reasons.append(f"{len(procs) - reported} lane(s) died unreported")
    total.reason = "; ".join(reasons)
    return total
