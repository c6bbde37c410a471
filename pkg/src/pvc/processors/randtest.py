"""Randomized interleaving self-test of the lender state machine.

Drives a fresh StreamLender through a seeded, precondition-respecting
stream of events (submit / lend / settle / revoke / late settles from
withdrawn holders / collect / close) over 2..4 simulated holders, and
checks the machine's guarantees after every event:

* conservation: submitted = pending + outstanding + settled, always;
* at most one outstanding lease holds an index (double-lends flagged);
* first-result-wins: nothing settles twice, late results land correctly;
* emission: indices leave in ascending order with the right values, and
  a drain at the end must release every submitted index exactly once.

The checker never reads lender internals: it mirrors what the public
return values imply and compares against the lender's public counters,
so a broken variant (see pvc.mutants) diverges visibly.

The whole procedure, including the event-choice tables and the trace
digest, is pinned: the browser worker ships a port that must return
bit-identical result objects for the same (seed, ops).
"""

from __future__ import annotations

import hashlib
from typing import Any, Callable, Mapping, Optional

from ..lender import StreamLender
from ..rng import SplitMix64
from . import ItemFailure, ProcessorBinding, merged

HIGH_WATER = 16


def _value_of(index: int) -> int:
    return index * 31 + 7


class _LiveLease:
    __slots__ = ("lease_id", "holder", "to_report", "original")

    def __init__(self, lease_id: str, holder: str, indices: list[int]):
        self.lease_id = lease_id
        self.holder = holder
        self.to_report = list(indices)
        self.original = list(indices)


class _Run:
    """One seeded drive of one lender instance."""

    def __init__(self, seed: int, ops: int,
                 lender_factory: Callable[..., StreamLender]):
        self.rng = SplitMix64(seed)
        self.ops = ops
        self.n_holders = 2 + self.rng.below(3)
        self.holders = [f"h{i}" for i in range(self.n_holders)]
        self.lender = lender_factory(high_water=HIGH_WATER)
        self.closed = False
        self.aborted = False
        # generator bookkeeping
        self.live: list[_LiveLease] = []
        self.ghosts: list[tuple[str, list[int]]] = []
        # checker mirror, maintained from return values only
        self.pending_m: set[int] = set()
        self.outstanding_m: set[int] = set()
        self.settled_m: set[int] = set()
        self.submitted = 0
        self.expected_next = 0
        self.emitted = 0
        # verdict
        self.violations = 0
        self.first_violation: Optional[dict] = None
        self.log: list[str] = []
        self.step_label = "0"

    # -- verdict helpers ------------------------------------------------

    def flag(self, code: str, detail: str = "") -> None:
        self.violations += 1
        self.log.append(f"V|{code}")
        if self.first_violation is None:
            self.first_violation = {
                "step": self.step_label,
                "code": code,
                "detail": detail,
            }

    def check_counts(self) -> None:
        lender = self.lender
        if lender.pending_count != len(self.pending_m):
            self.flag("pending-count",
                      f"{lender.pending_count}!={len(self.pending_m)}")
        if lender.outstanding_item_count != len(self.outstanding_m):
            self.flag("outstanding-count",
                      f"{lender.outstanding_item_count}!={len(self.outstanding_m)}")
        if lender.settled_count != len(self.settled_m):
            self.flag("settled-count",
                      f"{lender.settled_count}!={len(self.settled_m)}")
        total = (lender.pending_count + lender.outstanding_item_count
                 + lender.settled_count)
        if lender.submitted != total:
            self.flag("conservation", f"{lender.submitted}!={total}")

    # -- events ---------------------------------------------------------

    def do_submit(self) -> None:
        index = self.lender.submit(self.submitted)
        if index != self.submitted:
            self.flag("index-assignment", f"{index}!={self.submitted}")
        self.submitted += 1
        self.pending_m.add(index)
        self.log.append(f"s|{index}")

    def do_lend(self, holder: str, capacity: int) -> None:
        limit = self.lender.next_emit + HIGH_WATER
        lease = self.lender.lend(holder, capacity)
        if lease is None:
            self.log.append(f"l|{holder}|{capacity}|-|")
            return
        indices = [item.index for item in lease.items]
        for index in indices:
            if index in self.outstanding_m:
                self.flag("concurrent-hold", str(index))
            if index not in self.pending_m:
                self.flag("lend-of-nonpending", str(index))
            if index >= limit:
                self.flag("backpressure", str(index))
            self.pending_m.discard(index)
            self.outstanding_m.add(index)
        self.live.append(_LiveLease(lease.lease_id, holder, indices))
        self.log.append(
            f"l|{holder}|{capacity}|{lease.lease_id}|{_csv(indices)}")

    def absorb_settle(self, res) -> None:
        for index in res.accepted_indices:
            if index in self.settled_m:
                self.flag("double-settle", str(index))
            if index in self.outstanding_m:
                self.outstanding_m.discard(index)
            elif index in self.pending_m:
                self.pending_m.discard(index)
            else:
                self.flag("settle-from-nowhere", str(index))
            self.settled_m.add(index)

    def do_settle(self, record: _LiveLease, count: int, offset: int) -> None:
        rem = record.to_report
        chosen = [rem[(offset + j) % len(rem)] for j in range(count)]
        results = [(i, _value_of(i)) for i in chosen]
        res = self.lender.settle(record.lease_id, results)
        if res.stale:
            self.flag("unexpected-stale", record.lease_id)
        self.absorb_settle(res)
        keep = set(rem) - set(chosen)
        record.to_report = [i for i in rem if i in keep]
        if not record.to_report:
            self.live.remove(record)
            self.ghosts.append((record.lease_id, record.original))
        self.log.append(
            f"t|{record.lease_id}|{_csv(chosen)}|{_csv(res.accepted_indices)}"
            f"|{res.duplicates}|{int(res.stale)}")

    def do_late_settle(self) -> None:
        lease_id, indices = self.ghosts[self.rng.below(len(self.ghosts))]
        index = indices[self.rng.below(len(indices))]
        res = self.lender.settle(lease_id, [(index, _value_of(index))])
        self.absorb_settle(res)
        self.log.append(
            f"z|{lease_id}|{index}|{_csv(res.accepted_indices)}"
            f"|{res.duplicates}|{int(res.stale)}")

    def do_revoke(self, holder: str) -> None:
        requeued = self.lender.revoke(holder)
        for index in requeued:
            if index not in self.outstanding_m:
                self.flag("requeue-of-nonoutstanding", str(index))
            self.outstanding_m.discard(index)
            self.pending_m.add(index)
        for record in [r for r in self.live if r.holder == holder]:
            self.live.remove(record)
            self.ghosts.append((record.lease_id, record.to_report))
        self.log.append(f"r|{holder}|{_csv(requeued)}")

    def do_collect(self) -> None:
        got = self.lender.collect_ready()
        for index, value in got:
            if index != self.expected_next:
                self.flag("emit-order", f"{index}!={self.expected_next}")
            if value != _value_of(index):
                self.flag("emit-value", str(index))
            self.expected_next = index + 1
            self.emitted += 1
        first = got[0][0] if got else "-"
        self.log.append(f"c|{first}|{len(got)}")

    def do_close(self) -> None:
        done = self.lender.close_input()
        self.closed = True
        self.log.append(f"x|{int(done)}")

    # -- drive ----------------------------------------------------------

    def pick_event(self, step: int) -> str:
        choices: list[str] = []
        if not self.closed:
            choices += ["submit"] * 3
        choices += ["lend"] * 3
        if self.live:
            choices += ["settle"] * 4 + ["revoke"]
        if self.ghosts:
            choices += ["late"] * 2
        choices += ["collect"] * 2
        if not self.closed and step >= self.ops - self.ops // 8:
            choices.append("close")
        return choices[self.rng.below(len(choices))]

    def apply_one(self, kind: str) -> None:
        if kind == "submit":
            self.do_submit()
        elif kind == "lend":
            holder = self.holders[self.rng.below(self.n_holders)]
            self.do_lend(holder, 1 + self.rng.below(3))
        elif kind == "settle":
            record = self.live[self.rng.below(len(self.live))]
            count = 1 + self.rng.below(len(record.to_report))
            offset = self.rng.below(len(record.to_report))
            self.do_settle(record, count, offset)
        elif kind == "late":
            self.do_late_settle()
        elif kind == "revoke":
            self.do_revoke(self.holders[self.rng.below(self.n_holders)])
        elif kind == "collect":
            self.do_collect()
        else:
            self.do_close()

    def drive(self) -> None:
        for step in range(self.ops):
            self.step_label = str(step)
            kind = self.pick_event(step)
            try:
                self.apply_one(kind)
            except Exception as exc:  # a mutant corrupted itself
                self.flag("exception", f"{kind}:{type(exc).__name__}")
                self.aborted = True
                return
            self.check_counts()
        self.finale()

    def finale(self) -> None:
        """Drain everything and demand exactly-once completeness."""
        self.step_label = "finale"
        try:
            if not self.closed:
                self.do_close()
            guard = 10 * self.submitted + 20
            while not self.lender.is_done() and guard > 0:
                guard -= 1
                self.do_lend(self.holders[0], 8)
                if self.live:
                    record = self.live[0]
                    self.do_settle(record, len(record.to_report), 0)
                self.do_collect()
                self.check_counts()
            if not self.lender.is_done():
                self.flag("finale-stuck")
        except Exception as exc:
            self.flag("exception", f"finale:{type(exc).__name__}")
            self.aborted = True
            return
        if self.emitted != self.submitted or self.expected_next != self.submitted:
            self.flag("lost-or-duplicated",
                      f"emitted {self.emitted} of {self.submitted}")


def _csv(indices) -> str:
    return ",".join(map(str, indices))


def interleave_check(seed: int, ops: int,
                     lender_factory: Callable[..., StreamLender] = StreamLender,
                     ) -> dict[str, Any]:
    """Run one seeded interleaving; returns a wire-encodable verdict.

    ``trace_digest`` is the first 16 hex digits of the SHA-256 of the
    event log, so independent ports can prove they generated and
    observed the identical run, not merely the same violation count.
    """
    if ops < 1:
        raise ItemFailure("ops must be >= 1")
    run = _Run(seed, ops, lender_factory)
    run.drive()
    digest = hashlib.sha256("\n".join(run.log).encode("ascii")).hexdigest()[:16]
    out: dict[str, Any] = {
        "seed": seed,
        "violations": run.violations,
        "trace_digest": digest,
    }
    if run.first_violation is not None:
        out["first_violation"] = run.first_violation
    return out


def apply(params: Mapping[str, Any], value: Any) -> dict:
    fields = merged(params, value)
    try:
        seed = fields["seed"]
        ops = fields["ops"]
    except KeyError as exc:
        raise ItemFailure(f"missing field: {exc.args[0]}") from None
    for name, v in (("seed", seed), ("ops", ops)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ItemFailure(f"{name} must be an integer")
    if seed < 0:
        raise ItemFailure("seed must be >= 0")
    return interleave_check(seed, ops)


def bench_input(i: int) -> dict:
    return {"seed": i, "ops": 100}


BINDING = ProcessorBinding("rand-test", apply, bench_input)
