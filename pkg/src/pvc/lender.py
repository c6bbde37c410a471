"""StreamLender: the lending/reorder state machine behind the toolkit.

A lender owns the input stream of a job.  Items are queued in submission
order, lent out in batches (leases) to named holders, and settled back as
results arrive.  The lender guarantees that every submitted index is
emitted exactly once, in ascending order, no matter how holders join,
leave, fail, or race each other:

* at most one outstanding lease holds a given index at any time;
* items of a revoked lease that were never settled return to the front
  of the pending queue, lowest index first, so they are re-lent promptly;
* results are deduplicated first-result-wins: the first settle for an
  index is recorded, later ones (a revoked holder racing its
  replacement) are counted and discarded;
* results are buffered out of order and released only as the contiguous
  run starting at ``next_emit``.

The lender is a strictly sequential state machine: no clocks, no
randomness, no threads.  One logical owner applies events in order; all
concurrency belongs to the caller (the live coordinator or the
simulator).  Identical event sequences therefore produce identical
states, which is what makes the randomized interleaving suite
(processors.randtest) meaningful.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, NamedTuple, Optional

OUTSTANDING = "outstanding"
SETTLED = "settled"
REVOKED = "revoked"

#: Floor for the backpressure threshold when sizing from worker windows.
MIN_HIGH_WATER = 64


class LenderStateError(RuntimeError):
    """An operation was applied in a state that forbids it."""


@dataclass(frozen=True)
class Item:
    """One input value and its position in the stream."""

    index: int
    payload: Any


@dataclass
class Lease:
    """A batch of items lent to one holder.

    ``items`` shrinks as individual results settle; the lease becomes
    ``settled`` when it empties, or ``revoked`` when its holder is
    withdrawn.  Those are the only two transitions out of
    ``outstanding``.
    """

    lease_id: str
    holder: str
    items: list[Item]
    state: str = OUTSTANDING


class SettleResult(NamedTuple):
    accepted: int
    duplicates: int
    stale: bool
    accepted_indices: tuple[int, ...]


def default_high_water(total_window: int) -> int:
    """Backpressure threshold used when none is configured: deep enough
    to keep every worker's window full, floored at MIN_HIGH_WATER."""
    return max(MIN_HIGH_WATER, 8 * total_window)


class StreamLender:
    """Sequential lending/reorder state machine. See module docstring."""

    def __init__(self, high_water: int = MIN_HIGH_WATER):
        if high_water < 1:
            raise ValueError("high_water must be >= 1")
        self.high_water = high_water
        self.next_emit = 0
        self.input_closed = False
        self._pending: deque[Item] = deque()
        self._outstanding: dict[str, Lease] = {}
        self._reorder: dict[int, Any] = {}
        self._next_index = 0
        self._lease_seq = 0
        # holder -> ordered set of its outstanding lease ids
        self._holder_leases: dict[str, dict[str, None]] = {}
        # index -> lease_id while the index sits in an outstanding lease
        self._index_lease: dict[int, str] = {}
        # lease_id -> indices its holder has not yet reported a result for.
        # Entries survive revocation (the holder may still report late) and
        # are dropped once fully reported, so a settle for an id not found
        # here is a stale message from a lease that was never issued or has
        # already been fully reported.
        self._unreported: dict[str, set[int]] = {}
        self.duplicates = 0
        self.stale_settles = 0
        self.requeued = 0

    # ------------------------------------------------------------------
    # introspection

    @property
    def submitted(self) -> int:
        return self._next_index

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    @property
    def outstanding_item_count(self) -> int:
        return len(self._index_lease)

    @property
    def outstanding_lease_count(self) -> int:
        return len(self._outstanding)

    @property
    def reorder_count(self) -> int:
        return len(self._reorder)

    @property
    def settled_count(self) -> int:
        return self.next_emit + len(self._reorder)

    def is_settled(self, index: int) -> bool:
        return index < self.next_emit or index in self._reorder

    def is_addressable(self, lease_id: str) -> bool:
        """True while a settle for this lease id would still be routed
        (some of its items are unreported)."""
        return lease_id in self._unreported

    def wants_input(self) -> bool:
        """True while a newly submitted index would be immediately
        lendable; feeding only then bounds pending at high_water."""
        return (not self.input_closed
                and self._next_index < self.next_emit + self.high_water)

    def is_done(self) -> bool:
        return (self.input_closed
                and not self._pending
                and not self._outstanding
                and self.next_emit == self._next_index)

    # ------------------------------------------------------------------
    # events

    def submit(self, payload: Any) -> int:
        """Append one input value; returns its stream index."""
        if self.input_closed:
            raise LenderStateError("submit after close_input")
        index = self._next_index
        self._next_index += 1
        self._pending.append(Item(index, payload))
        return index

    def lend(self, holder: str, capacity: int) -> Optional[Lease]:
        """Move up to ``capacity`` pending items into a new outstanding
        lease for ``holder``.

        Returns None when nothing is lendable: the queue is empty, or the
        item at the front is beyond the backpressure limit
        ``next_emit + high_water`` (lending it would let the reorder
        buffer grow without bound).
        """
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        limit = self.next_emit + self.high_water
        taken: list[Item] = []
        while (self._pending and len(taken) < capacity
               and self._pending[0].index < limit):
            taken.append(self._pending.popleft())
        if not taken:
            return None
        lease_id = f"L{self._lease_seq}"
        self._lease_seq += 1
        lease = Lease(lease_id, holder, taken)
        self._outstanding[lease_id] = lease
        self._holder_leases.setdefault(holder, {})[lease_id] = None
        for item in taken:
            self._index_lease[item.index] = lease_id
        self._unreported[lease_id] = {item.index for item in taken}
        return lease

    def settle(self, lease_id: str, results: Iterable[tuple[int, Any]]) -> SettleResult:
        """Record results reported against a lease.

        First result wins per index: a result for an index nobody has
        settled yet is accepted even if the lease was revoked meanwhile
        (the index is pulled back out of the pending queue or out of the
        lease it was re-lent to).  Results for already-settled indices
        are counted as duplicates and discarded, which is what keeps
        output exactly-once when a revoked holder races its replacement.

        A ``lease_id`` that was never issued, or whose results have all
        been reported already, yields ``stale=True`` with nothing
        accepted: a late message from a connection the coordinator has
        written off entirely.
        """
        expected = self._unreported.get(lease_id)
        if expected is None:
            self.stale_settles += 1
            return SettleResult(0, 0, True, ())
        accepted: list[int] = []
        dups = 0
        for index, value in results:
            if index not in expected:
                dups += 1
                continue
            expected.discard(index)
            if self.is_settled(index):
                dups += 1
                continue
            self._withdraw(index)
            self._reorder[index] = value
            accepted.append(index)
        if not expected:
            del self._unreported[lease_id]
        self.duplicates += dups
        return SettleResult(len(accepted), dups, False, tuple(accepted))

    def revoke(self, holder: str) -> list[int]:
        """Withdraw a holder: every lease it still holds is revoked and
        the unsettled items go back to the front of pending, lowest
        index first.  Returns the re-queued indices (ascending)."""
        lease_ids = self._holder_leases.pop(holder, None)
        if not lease_ids:
            return []
        recovered: list[Item] = []
        for lease_id in lease_ids:
            lease = self._outstanding.pop(lease_id)
            lease.state = REVOKED
            for item in lease.items:
                del self._index_lease[item.index]
                recovered.append(item)
        recovered.sort(key=lambda item: item.index)
        self._pending.extendleft(reversed(recovered))
        self.requeued += len(recovered)
        return [item.index for item in recovered]

    def collect_ready(self) -> list[tuple[int, Any]]:
        """Release the maximal contiguous run of settled results starting
        at ``next_emit``; empty when the next index is still missing."""
        out: list[tuple[int, Any]] = []
        while self.next_emit in self._reorder:
            out.append((self.next_emit, self._reorder.pop(self.next_emit)))
            self.next_emit += 1
        return out

    def close_input(self) -> bool:
        """Mark the input stream complete.  Returns True once everything
        submitted has been settled and collected."""
        self.input_closed = True
        return self.is_done()

    # ------------------------------------------------------------------

    def _withdraw(self, index: int) -> None:
        # Remove a not-yet-settled index from whichever structure holds it:
        # its outstanding lease, or the pending queue if it was re-queued
        # by a revoke and not re-lent yet.
        lease_id = self._index_lease.pop(index, None)
        if lease_id is not None:
            lease = self._outstanding[lease_id]
            lease.items = [item for item in lease.items if item.index != index]
            if not lease.items:
                lease.state = SETTLED
                del self._outstanding[lease_id]
                holder_set = self._holder_leases.get(lease.holder)
                if holder_set is not None:
                    holder_set.pop(lease_id, None)
                    if not holder_set:
                        del self._holder_leases[lease.holder]
            return
        for i, item in enumerate(self._pending):
            if item.index == index:
                del self._pending[i]
                return
        raise AssertionError(f"index {index} unsettled but not held anywhere")
