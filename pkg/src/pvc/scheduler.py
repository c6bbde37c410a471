"""Pull-based window scheduling over a StreamLender.

This is the one copy of the dispatch policy: each worker advertises a
window (max unsettled items); joining fills the window with one lease,
and every reported result frees one slot which is refilled from the
front of the queue.  Faster workers therefore complete more items and
pull proportionally more work, with no rate estimation anywhere.

Both the live coordinator and the discrete-event simulator drive this
class; neither reimplements the policy, so what the churn simulations
certify is the code that production runs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterator, Optional

from .lender import Lease, SettleResult, StreamLender


class InputFeed:
    """Lazily tops up the lender from an input source, throttled by the
    lender's backpressure so arbitrarily long streams stay in bounded
    memory.  Supports pull mode (an iterator) and push mode (push() +
    finish(), for transports that deliver input asynchronously)."""

    def __init__(self, lender: StreamLender, source: Optional[Iterator[Any]] = None):
        self.lender = lender
        self.source = source
        self.buffer: deque[Any] = deque()
        # push-mode feeds stay open until finish(); pull-mode feeds close
        # when the source iterator ends
        self.finished = False

    def push(self, value: Any) -> None:
        self.buffer.append(value)

    def finish(self) -> None:
        self.finished = True
        self.top_up()

    def top_up(self) -> None:
        lender = self.lender
        while lender.wants_input():
            if self.buffer:
                lender.submit(self.buffer.popleft())
                continue
            if self.source is not None:
                try:
                    lender.submit(next(self.source))
                    continue
                except StopIteration:
                    self.source = None
                    self.finished = True
            break
        if (self.finished and not self.buffer and not lender.input_closed):
            lender.close_input()

    @property
    def exhausted(self) -> bool:
        return self.finished and not self.buffer


@dataclass
class WorkerStats:
    worker_id: str
    label: str
    window: int
    in_flight: int = 0
    completed: int = 0
    busy_ms: float = 0.0


class PullScheduler:
    def __init__(self, lender: StreamLender, feed: InputFeed):
        self.lender = lender
        self.feed = feed
        self.workers: dict[str, WorkerStats] = {}
        self.departed: list[WorkerStats] = []
        self._lease_owner: dict[str, str] = {}
        self._label_order: list[str] = []

    # ------------------------------------------------------------------

    def add_worker(self, worker_id: str, label: str, window: int) -> Optional[Lease]:
        if worker_id in self.workers:
            raise ValueError(f"worker id already live: {worker_id}")
        if window < 1:
            raise ValueError("window must be >= 1")
        self.workers[worker_id] = WorkerStats(worker_id, label, window)
        if label not in self._label_order:
            self._label_order.append(label)
        return self.fill(worker_id)

    def fill(self, worker_id: str) -> Optional[Lease]:
        """Lend up to the worker's spare window in one lease."""
        stats = self.workers[worker_id]
        capacity = stats.window - stats.in_flight
        if capacity < 1:
            return None
        self.feed.top_up()
        lease = self.lender.lend(worker_id, capacity)
        if lease is not None:
            stats.in_flight += len(lease.items)
            self._lease_owner[lease.lease_id] = worker_id
        return lease

    def refill_all(self) -> list[tuple[str, Lease]]:
        """Fill every live worker's spare window; called whenever queue
        state may have changed for someone other than the reporter
        (revokes, emissions that release backpressure, fresh input)."""
        out = []
        for worker_id in self.workers:
            lease = self.fill(worker_id)
            if lease is not None:
                out.append((worker_id, lease))
        return out

    def on_report(self, worker_id: str, lease_id: str, index: int,
                  value: Any, elapsed_ms: float = 0.0) -> SettleResult:
        """Settle one reported result (or error record) and account it
        to the reporting worker.  Replenishment is the caller's next
        refill_all(); emission is the caller's collect_ready()."""
        result = self.lender.settle(lease_id, [(index, value)])
        stats = self.workers.get(worker_id)
        if stats is not None and self._lease_owner.get(lease_id) == worker_id:
            stats.in_flight = max(0, stats.in_flight - 1)
            stats.completed += 1
            stats.busy_ms += elapsed_ms
        if not result.stale and not self.lender.is_addressable(lease_id):
            self._lease_owner.pop(lease_id, None)
        return result

    def remove_worker(self, worker_id: str) -> list[int]:
        """Withdraw a worker (failure, timeout, or goodbye): its items
        are revoked back to the queue and its stats keep contributing to
        the final report."""
        stats = self.workers.pop(worker_id, None)
        if stats is None:
            return []
        self.departed.append(stats)
        return self.lender.revoke(worker_id)

    # ------------------------------------------------------------------

    @property
    def total_window(self) -> int:
        return sum(s.window for s in self.workers.values())

    def all_stats(self) -> list[WorkerStats]:
        return list(self.workers.values()) + self.departed

    def device_rows(self) -> list[tuple[str, int]]:
        """Completed counts merged by device label (lanes of one device
        report under one label), in first-seen order."""
        merged: dict[str, int] = {}
        for stats in self.all_stats():
            merged[stats.label] = merged.get(stats.label, 0) + stats.completed
        return [(label, merged[label]) for label in self._label_order]

    def is_idle_done(self) -> bool:
        self.feed.top_up()
        return self.feed.exhausted and self.lender.is_done()
