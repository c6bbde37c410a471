"""The master process: owns the input stream, lends work to whoever is
connected, and assembles ordered output.

Split in two layers:

* CoordinatorCore is a pure state machine over protocol messages: hello,
  results, pongs, byes, ticks, input arrival.  One logical owner applies
  events strictly in order (the lender's contract), so every scheduling
  decision is unit-testable without a socket.
* serve_master / run_master adapt the core to asyncio + WebSocket:
  connection handlers decode frames into an event queue, one master task
  drains it, per-connection sender tasks keep outbound frames ordered,
  a ticker drives heartbeats, and a reader thread feeds stdin/file input
  without ever blocking the loop.

Workers that stop answering pings for heartbeat_misses periods are
disconnected and their items re-lent; a deterministic item failure
becomes an error record at that index (re-running it would fail again);
transport failures re-lend.  The coordinator never computes items
itself: run a local `pvc work` to use the local cores.
"""

from __future__ import annotations

import asyncio
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, TextIO

from .lender import StreamLender, default_high_water
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
    WireItem,
    decode_message,
    encode_message,
)
from .report import ThroughputReport, make_report
from .scheduler import InputFeed, PullScheduler

OK = "ok"
ERR = "err"


@dataclass
class JobConfig:
    task: TaskSpec
    window: int = 2
    heartbeat_period: float = 5.0
    heartbeat_misses: int = 3
    high_water: Optional[int] = None  # None: sized from connected windows
    port: int = 8080
    host: str = "0.0.0.0"
    assets_dir: Optional[str] = None

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.heartbeat_period <= 0:
            raise ValueError("heartbeat_period must be positive")
        if self.heartbeat_misses < 1:
            raise ValueError("heartbeat_misses must be >= 1")


@dataclass
class WorkerState:
    worker_id: str
    agent: str
    cores: int
    window: int
    connected_at: float
    last_pong: float


@dataclass
class Actions:
    """What the transport should do after the core absorbed an event."""

    outbound: list[tuple[str, Message]] = field(default_factory=list)
    close: list[str] = field(default_factory=list)


class CoordinatorCore:
    def __init__(self, config: JobConfig, emit: Callable[[dict], None]):
        self.config = config
        self.emit = emit
        self.lender = StreamLender(
            high_water=config.high_water or default_high_water(0))
        self.feed = InputFeed(self.lender)  # push mode; adapter feeds it
        self.sched = PullScheduler(self.lender, self.feed)
        self.workers: dict[str, WorkerState] = {}
        self._id_seq = 0

    # ------------------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.feed.exhausted and self.lender.is_done()

    def push_input(self, value: Any) -> Actions:
        self.feed.push(value)
        self.feed.top_up()
        return self._grants(self.sched.refill_all())

    def finish_input(self) -> Actions:
        self.feed.finish()
        return Actions()

    def on_hello(self, hello: Hello, now: float) -> tuple[str, Actions]:
        worker_id = hello.worker_id
        if not worker_id or worker_id in self.workers:
            self._id_seq += 1
            worker_id = f"w{self._id_seq}"
        window = self.config.window
        if self.config.high_water is None:
            # grow the reorder headroom as windows join; never shrink it
            wanted = default_high_water(self.sched.total_window + window)
            self.lender.high_water = max(self.lender.high_water, wanted)
        self.workers[worker_id] = WorkerState(
            worker_id=worker_id, agent=hello.agent, cores=hello.cores,
            window=window, connected_at=now, last_pong=now)
        actions = Actions(outbound=[
            (worker_id, Welcome(worker_id=worker_id, task=self.config.task,
                                window=window))])
        lease = self.sched.add_worker(worker_id, hello.agent, window)
        if lease is not None:
            actions.outbound.append((worker_id, self._grant_msg(lease)))
        return worker_id, actions

    def on_message(self, worker_id: str, msg: Message, now: float) -> Actions:
        if worker_id not in self.workers:
            # written off, but results already on the wire are still
            # results: first-result-wins may harvest them (stale leases
            # bounce inside the lender)
            if isinstance(msg, Result):
                return self._on_report(worker_id, msg.lease_id, msg.index,
                                       (OK, msg.value), msg.elapsed_ms)
            if isinstance(msg, ItemError):
                return self._on_report(worker_id, msg.lease_id, msg.index,
                                       (ERR, msg.message), 0.0)
            return Actions()
        if isinstance(msg, Result):
            return self._on_report(worker_id, msg.lease_id, msg.index,
                                   (OK, msg.value), msg.elapsed_ms)
        if isinstance(msg, ItemError):
            return self._on_report(worker_id, msg.lease_id, msg.index,
                                   (ERR, msg.message), 0.0)
        if isinstance(msg, Pong):
            self.workers[worker_id].last_pong = now
            return Actions()
        if isinstance(msg, Bye):
            actions = self.on_leave(worker_id)
            actions.close.append(worker_id)
            return actions
        # a worker has no business sending coordinator-side messages
        actions = self.on_leave(worker_id)
        actions.close.append(worker_id)
        return actions

    def on_tick(self, now: float) -> Actions:
        deadline = self.config.heartbeat_misses * self.config.heartbeat_period
        actions = Actions()
        for worker_id, state in list(self.workers.items()):
            if now - state.last_pong > deadline:
                actions.close.append(worker_id)
                late = self.on_leave(worker_id)
                actions.outbound.extend(late.outbound)
            else:
                actions.outbound.append((worker_id, Ping(t=round(now * 1000.0, 3))))
        return actions

    def on_leave(self, worker_id: str) -> Actions:
        """Connection gone (failure, timeout, bye, protocol error): revoke
        and let survivors pick the items up."""
        if worker_id not in self.workers:
            return Actions()
        del self.workers[worker_id]
        self.sched.remove_worker(worker_id)
        return self._grants(self.sched.refill_all())

    def bye_all(self) -> Actions:
        return Actions(outbound=[(wid, Bye()) for wid in self.workers],
                       close=list(self.workers))

    def make_report(self, wall_s: float) -> ThroughputReport:
        return make_report(self.sched.device_rows(), wall_s,
                           duplicates=self.lender.duplicates,
                           reprocessed=self.lender.requeued)

    # ------------------------------------------------------------------

    def _on_report(self, worker_id: str, lease_id: str, index: int,
                   value: tuple, elapsed_ms: float) -> Actions:
        self.sched.on_report(worker_id, lease_id, index, value, elapsed_ms)
        for idx, (kind, payload) in self.lender.collect_ready():
            if kind == OK:
                self.emit({"index": idx, "value": payload})
            else:
                self.emit({"index": idx, "error": payload})
        # replenish the reporter first, then anyone the emission unblocked
        grants = []
        if worker_id in self.workers:
            lease = self.sched.fill(worker_id)
            if lease is not None:
                grants.append((worker_id, lease))
        grants.extend(self.sched.refill_all())
        return self._grants(grants)

    def _grant_msg(self, lease) -> LeaseGrant:
        return LeaseGrant(
            lease_id=lease.lease_id,
            items=tuple(WireItem(item.index, item.payload)
                        for item in lease.items))

    def _grants(self, pairs) -> Actions:
        return Actions(outbound=[(wid, self._grant_msg(lease))
                                 for wid, lease in pairs])


# ---------------------------------------------------------------------------
# asyncio / WebSocket adapter


WS_PATH = "/volunteer"

_PAGE_HINT = (
    "pvc coordinator is running.\n"
    "Workers connect to ws://HOST:PORT/volunteer\n"
    "(browser worker page not bundled; build frontend/ to serve it here)\n"
)


class _Chan:
    """Per-connection outbound queue + sender task: frames leave in the
    order the master produced them, and the master never blocks."""

    def __init__(self, conn):
        self.conn = conn
        self.queue: asyncio.Queue = asyncio.Queue()
        self.task: Optional[asyncio.Task] = None

    async def run(self):
        try:
            while True:
                frame = await self.queue.get()
                if frame is None:
                    await self.conn.close()
                    return
                await self.conn.send(frame)
        except Exception:
            return  # the recv loop will surface the disconnect

    def send(self, msg: Message) -> None:
        self.queue.put_nowait(encode_message(msg))

    def close_soon(self) -> None:
        self.queue.put_nowait(None)


async def serve_master(config: JobConfig, input_values: Iterable[Any],
                       output: TextIO,
                       ready: Optional[Callable[[int], None]] = None,
                       ) -> ThroughputReport:
    import json

    from websockets.asyncio.server import serve
    from websockets.datastructures import Headers
    from websockets.http11 import Response

    loop = asyncio.get_running_loop()
    events: asyncio.Queue = asyncio.Queue()
    chans: dict[str, _Chan] = {}

    def emit(record: dict) -> None:
        output.write(json.dumps(record, separators=(",", ":")) + "\n")
        output.flush()

    core = CoordinatorCore(config, emit)

    # -- input reader thread (bounded; never blocks the loop) ----------
    gate = threading.Semaphore(256)
    stop = threading.Event()

    def read_input():
        try:
            for value in input_values:
                while not gate.acquire(timeout=0.2):
                    if stop.is_set():
                        return
                if stop.is_set():
                    return
                loop.call_soon_threadsafe(events.put_nowait, ("input", value))
        finally:
            loop.call_soon_threadsafe(events.put_nowait, ("input_eof",))

    reader = threading.Thread(target=read_input, name="pvc-input", daemon=True)

    # -- connection handling --------------------------------------------
    async def handler(conn):
        if conn.request is None or conn.request.path != WS_PATH:
            await conn.close(code=1008, reason="connect to /volunteer")
            return
        chan = _Chan(conn)
        chan.task = asyncio.create_task(chan.run())
        worker_id = None
        try:
            first = await asyncio.wait_for(conn.recv(), timeout=30)
            hello = decode_message(first)
            if not isinstance(hello, Hello):
                raise ProtocolError("expected hello first")
            fut: asyncio.Future = loop.create_future()
            events.put_nowait(("hello", chan, hello, fut))
            worker_id = await fut
            async for frame in conn:
                try:
                    msg = decode_message(frame)
                except ProtocolError:
                    events.put_nowait(("proto_error", worker_id))
                    return
                events.put_nowait(("msg", worker_id, msg))
        except ProtocolError:
            await conn.close(code=1002, reason="protocol error")
        except (asyncio.TimeoutError, Exception):
            pass
        finally:
            if worker_id is not None:
                events.put_nowait(("leave", worker_id))
            chan.close_soon()

    def process_request(conn, request):
        if "upgrade" in request.headers.get("Connection", "").lower() or \
                request.headers.get("Upgrade", "").lower() == "websocket":
            return None  # continue the websocket handshake
        body, ctype, status = _serve_asset(config.assets_dir, request.path)
        return Response(status, "OK" if status == 200 else "Not Found",
                        Headers([("Content-Type", ctype),
                                 ("Content-Length", str(len(body)))]),
                        body)

    async def ticker():
        while True:
            await asyncio.sleep(config.heartbeat_period)
            events.put_nowait(("tick",))

    def apply(actions: Actions) -> None:
        for worker_id, msg in actions.outbound:
            chan = chans.get(worker_id)
            if chan is not None:
                chan.send(msg)
        for worker_id in actions.close:
            chan = chans.pop(worker_id, None)
            if chan is not None:
                chan.close_soon()

    started = time.monotonic()
    async with serve(handler, config.host, config.port,
                     process_request=process_request,
                     ping_interval=None) as server:
        port = server.sockets[0].getsockname()[1] if server.sockets else config.port
        if ready is not None:
            ready(port)
        reader.start()
        tick_task = asyncio.create_task(ticker())
        try:
            while True:
                event = await events.get()
                kind = event[0]
                now = time.monotonic()
                if kind == "input":
                    gate.release()
                    apply(core.push_input(event[1]))
                elif kind == "input_eof":
                    apply(core.finish_input())
                elif kind == "hello":
                    _, chan, hello, fut = event
                    worker_id, actions = core.on_hello(hello, now)
                    chans[worker_id] = chan
                    if not fut.done():
                        fut.set_result(worker_id)
                    apply(actions)
                elif kind == "msg":
                    apply(core.on_message(event[1], event[2], now))
                elif kind in ("leave", "proto_error"):
                    apply(core.on_leave(event[1]))
                    chan = chans.pop(event[1], None)
                    if chan is not None:
                        chan.close_soon()
                elif kind == "tick":
                    apply(core.on_tick(now))
                if core.done:
                    apply(core.bye_all())
                    break
        finally:
            stop.set()
            tick_task.cancel()
            for chan in chans.values():
                chan.close_soon()
            if chans:
                await asyncio.wait(
                    [chan.task for chan in chans.values() if chan.task],
                    timeout=2.0)
    return core.make_report(time.monotonic() - started)


def _serve_asset(assets_dir: Optional[str], path: str) -> tuple[bytes, str, int]:
    import os

    if assets_dir:
        name = "index.html" if path == "/" else path.lstrip("/")
        full = os.path.realpath(os.path.join(assets_dir, name))
        if (full.startswith(os.path.realpath(assets_dir) + os.sep)
                and os.path.isfile(full)):
            ctype = {
                ".html": "text/html; charset=utf-8",
                ".js": "text/javascript; charset=utf-8",
                ".css": "text/css; charset=utf-8",
            }.get(os.path.splitext(full)[1], "application/octet-stream")
            with open(full, "rb") as fh:
                return fh.read(), ctype, 200
    if path == "/":
        return _PAGE_HINT.encode(), "text/plain; charset=utf-8", 200
    return b"not found\n", "text/plain; charset=utf-8", 404


def run_master(config: JobConfig, input_values: Iterable[Any], output: TextIO,
               ready: Optional[Callable[[int], None]] = None) -> ThroughputReport:
    """Blocking wrapper around serve_master."""
    return asyncio.run(serve_master(config, input_values, output, ready))
