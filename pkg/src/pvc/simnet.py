"""Deterministic discrete-event simulation of a volunteer fleet.

The simulator drives the real StreamLender and PullScheduler (the same
objects the live coordinator uses; nothing is reimplemented) with
simulated workers described by rate, link latency, join time, and an
optional failure time.  Service times are deterministic (1/rate) with
optional bounded jitter drawn from splitmix64, so identical inputs give
bit-identical traces on every platform.

A run produces a SimTrace: the timestamped event log (join / lend /
settle / emit / revoke / fail) plus the final throughput report.
check_trace_properties replays a trace and asserts the properties the
whole toolkit stands on: exactly-once ascending emission, no index held
by two live workers, bounded reprocessing after failures, and zero
redundant executions in failure-free runs.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .lender import StreamLender, default_high_water
from .report import ThroughputReport, make_report
from .rng import SplitMix64
from .scheduler import InputFeed, PullScheduler


@dataclass(frozen=True)
class SimWorkerSpec:
    label: str
    rate: float                      # items per second of deterministic service
    latency_ms: float = 0.0          # one-way link delay
    join_at: float = 0.0             # seconds
    fail_at: Optional[float] = None  # seconds; None = survives
    window: int = 2


@dataclass
class SimTrace:
    events: list[dict]
    report: ThroughputReport
    n_items: int
    makespan: float

    def to_ndjson(self) -> str:
        return "\n".join(json.dumps(e, separators=(",", ":")) for e in self.events)


@dataclass(frozen=True)
class TraceVerdict:
    ok: bool
    violations: tuple[str, ...]


class SimDeadEnd(RuntimeError):
    def __init__(self, remaining: list[int]):
        super().__init__(f"all workers failed with {len(remaining)} items "
                         f"unfinished: {remaining[:10]}...")
        self.remaining = remaining


def fleet_high_water(workers: list[SimWorkerSpec]) -> int:
    """Reorder headroom that keeps the fastest worker fed while the
    slowest sits on the oldest indices: the known rates say how far the
    fleet runs ahead during one slow window."""
    total_window = sum(w.window for w in workers)
    rates = [w.rate for w in workers]
    spread = math.ceil(max(w.window for w in workers) * sum(rates) / min(rates))
    return max(default_high_water(total_window), spread + total_window)


class _SimWorker:
    __slots__ = ("spec", "worker_id", "alive", "busy", "queue")

    def __init__(self, spec: SimWorkerSpec, worker_id: str):
        self.spec = spec
        self.worker_id = worker_id
        self.alive = False
        self.busy = False
        self.queue: list[tuple[str, int, Any]] = []


def simulate(workers: list[SimWorkerSpec], n_items: int, seed: int = 0,
             jitter_pct: float = 0.0,
             lender_factory: Callable[..., StreamLender] = StreamLender,
             high_water: Optional[int] = None) -> SimTrace:
    if not workers:
        raise ValueError("need at least one worker")
    for w in workers:
        if w.rate <= 0:
            raise ValueError(f"rate must be positive: {w.label}")
        if w.fail_at is not None and w.fail_at <= w.join_at:
            raise ValueError(f"fail_at must be after join_at: {w.label}")
    if not 0 <= jitter_pct <= 100:
        raise ValueError("jitter_pct must be in 0..100")

    rng = SplitMix64(seed)
    lender = lender_factory(high_water=high_water or fleet_high_water(workers))
    feed = InputFeed(lender, iter(range(n_items)))
    sched = PullScheduler(lender, feed)

    sims = {f"w{i}": _SimWorker(spec, f"w{i}") for i, spec in enumerate(workers)}
    events: list[dict] = []
    heap: list[tuple] = []
    seq = 0
    emitted = 0
    makespan = 0.0

    def push(t: float, kind: str, data: tuple) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, data))
        seq += 1

    def service_time(sim: _SimWorker) -> float:
        u = rng.signed_unit()
        return (1.0 / sim.spec.rate) * (1.0 + u * jitter_pct / 100.0)

    def start_service(sim: _SimWorker, t: float) -> None:
        if sim.busy or not sim.queue:
            return
        sim.busy = True
        lease_id, index, payload = sim.queue.pop(0)
        dt = service_time(sim)
        push(t + dt, "service_done", (sim.worker_id, lease_id, index, payload, dt))

    def grant(t: float, worker_id: str, lease) -> None:
        events.append({"t": t, "kind": "lend", "worker": worker_id,
                       "lease_id": lease.lease_id,
                       "indices": [item.index for item in lease.items]})
        sim = sims[worker_id]
        push(t + sim.spec.latency_ms / 1000.0, "lease_arrive",
             (worker_id, lease.lease_id,
              [(item.index, item.payload) for item in lease.items]))

    def refill(t: float) -> None:
        for worker_id, lease in sched.refill_all():
            grant(t, worker_id, lease)

    def collect(t: float) -> None:
        nonlocal emitted, makespan
        for index, value in lender.collect_ready():
            events.append({"t": t, "kind": "emit", "index": index, "value": value})
            emitted += 1
            makespan = t

    for worker_id, sim in sims.items():
        push(sim.spec.join_at, "join", (worker_id,))
        if sim.spec.fail_at is not None:
            push(sim.spec.fail_at, "fail", (worker_id,))

    while heap:
        t, _, kind, data = heapq.heappop(heap)
        if kind == "join":
            (worker_id,) = data
            sim = sims[worker_id]
            sim.alive = True
            events.append({"t": t, "kind": "join", "worker": worker_id,
                           "label": sim.spec.label, "window": sim.spec.window})
            lease = sched.add_worker(worker_id, sim.spec.label, sim.spec.window)
            if lease is not None:
                grant(t, worker_id, lease)
        elif kind == "lease_arrive":
            worker_id, lease_id, pairs = data
            sim = sims[worker_id]
            if not sim.alive:
                continue  # lost in flight; already revoked at the failure
            sim.queue.extend((lease_id, i, p) for i, p in pairs)
            start_service(sim, t)
        elif kind == "service_done":
            worker_id, lease_id, index, payload, dt = data
            sim = sims[worker_id]
            if not sim.alive:
                continue  # died mid-service
            sim.busy = False
            push(t + sim.spec.latency_ms / 1000.0, "result_arrive",
                 (worker_id, lease_id, index, payload, dt * 1000.0))
            start_service(sim, t)
        elif kind == "result_arrive":
            # results already on the wire outlive their sender
            worker_id, lease_id, index, value, elapsed_ms = data
            res = sched.on_report(worker_id, lease_id, index, value, elapsed_ms)
            events.append({"t": t, "kind": "settle", "worker": worker_id,
                           "lease_id": lease_id, "index": index,
                           "accepted": index in res.accepted_indices,
                           "duplicate": res.duplicates > 0, "stale": res.stale})
            collect(t)
            refill(t)
        elif kind == "fail":
            (worker_id,) = data
            sim = sims[worker_id]
            sim.alive = False
            sim.busy = False
            sim.queue.clear()
            events.append({"t": t, "kind": "fail", "worker": worker_id})
            requeued = sched.remove_worker(worker_id)
            events.append({"t": t, "kind": "revoke", "worker": worker_id,
                           "indices": requeued})
            refill(t)

    if emitted != n_items:
        done = {e["index"] for e in events if e["kind"] == "emit"}
        raise SimDeadEnd([i for i in range(n_items) if i not in done])

    report = make_report(sched.device_rows(), makespan,
                         duplicates=lender.duplicates,
                         reprocessed=lender.requeued)
    return SimTrace(events=events, report=report, n_items=n_items,
                    makespan=makespan)


def check_trace_properties(trace: SimTrace) -> TraceVerdict:
    """Pure replay of a trace against the toolkit's execution properties."""
    violations: list[str] = []
    held: dict[int, str] = {}
    windows: dict[str, int] = {}
    failed: set[str] = set()
    lent_total = 0
    emits: list[tuple[int, Any]] = []
    last_t = -math.inf

    for event in trace.events:
        t = event["t"]
        if t < last_t:
            violations.append(f"time-travel({t})")
        last_t = t
        kind = event["kind"]
        if kind == "join":
            windows[event["worker"]] = event["window"]
        elif kind == "lend":
            for index in event["indices"]:
                if index in held:
                    violations.append(f"concurrent-hold({index})")
                held[index] = event["worker"]
                lent_total += 1
        elif kind == "settle":
            if event["accepted"]:
                held.pop(event["index"], None)
        elif kind == "revoke":
            indices = event["indices"]
            for index in indices:
                held.pop(index, None)
            window = windows.get(event["worker"], 0)
            if len(indices) > window:
                violations.append(
                    f"reprocess-exceeds-window({event['worker']}:{len(indices)})")
        elif kind == "fail":
            failed.add(event["worker"])
        elif kind == "emit":
            emits.append((event["index"], event["value"]))

    expected = 0
    for index, value in emits:
        if index == expected:
            if value != index:
                violations.append(f"emit-value({index})")
            expected += 1
        elif index < expected:
            violations.append(f"duplicate-emit({index})")
        else:
            violations.append(f"emit-order({index}!={expected})")
            expected = index + 1
    if expected != trace.n_items:
        violations.append(f"missing-emit({expected})")

    if not failed and lent_total != trace.n_items:
        violations.append(f"executions({lent_total}!={trace.n_items})")

    return TraceVerdict(ok=not violations, violations=tuple(violations))


def pipeline_speedup(rate: float, rtt_ms: float, windows: list[int],
                     n_items: int = 400) -> dict[int, float]:
    """Throughput of a single worker at each pipeline window, showing how
    deep the window must be to hide the link's round trip."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    out = {}
    for window in windows:
        spec = SimWorkerSpec(label=f"probe-w{window}", rate=rate,
                             latency_ms=rtt_ms / 2.0, window=window)
        trace = simulate([spec], n_items, seed=0, jitter_pct=0.0)
        out[window] = n_items / trace.makespan if trace.makespan > 0 else 0.0
    return out


def load_fleet(path: str) -> list[SimWorkerSpec]:
    """Fleet spec file: a JSON array of SimWorkerSpec objects."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError("fleet file must be a JSON array")
    fleet = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "label" not in entry or "rate" not in entry:
            raise ValueError(f"fleet entry {i} needs at least label and rate")
        known = {"label", "rate", "latency_ms", "join_at", "fail_at", "window"}
        unknown = set(entry) - known
        if unknown:
            raise ValueError(f"fleet entry {i} has unknown fields: {sorted(unknown)}")
        fleet.append(SimWorkerSpec(**entry))
    return fleet
