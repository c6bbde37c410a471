// Randomized interleaving self-test: a faithful port of the native
// driver. Event choices, log lines, and the trace digest must match the
// native implementation bit for bit, which is what the shared vector
// file checks. Keep every draw from the RNG in the same order.

import { SplitMix64 } from "./splitmix64.js";
import { StreamLender, SettleResult } from "./lender.js";
import type { Json } from "./protocol.js";

export const HIGH_WATER = 16;

function valueOf(index: number): number {
  return index * 31 + 7;
}

function csv(indices: number[]): string {
  return indices.join(",");
}

interface LiveLease {
  leaseId: string;
  holder: string;
  toReport: number[];
  original: number[];
}

export interface Violation {
  step: string;
  code: string;
  detail: string;
}

export interface InterleaveVerdict {
  seed: number;
  violations: number;
  trace_digest: string;
  first_violation?: Violation;
}

class Run {
  rng: SplitMix64;
  ops: number;
  nHolders: number;
  holders: string[];
  lender: StreamLender;
  closed = false;
  aborted = false;
  live: LiveLease[] = [];
  ghosts: Array<[string, number[]]> = [];
  pendingM = new Set<number>();
  outstandingM = new Set<number>();
  settledM = new Set<number>();
  submitted = 0;
  expectedNext = 0;
  emitted = 0;
  violations = 0;
  firstViolation: Violation | null = null;
  log: string[] = [];
  stepLabel = "0";

  constructor(seed: number, ops: number, factory: (hw: number) => StreamLender) {
    this.rng = new SplitMix64(seed);
    this.ops = ops;
    this.nHolders = 2 + this.rng.below(3);
    this.holders = Array.from({ length: this.nHolders }, (_, i) => `h${i}`);
    this.lender = factory(HIGH_WATER);
  }

  flag(code: string, detail = ""): void {
    this.violations += 1;
    this.log.push(`V|${code}`);
    if (this.firstViolation === null) {
      this.firstViolation = { step: this.stepLabel, code, detail };
    }
  }

  checkCounts(): void {
    const lender = this.lender;
    if (lender.pendingCount !== this.pendingM.size) {
      this.flag("pending-count", `${lender.pendingCount}!=${this.pendingM.size}`);
    }
    if (lender.outstandingItemCount !== this.outstandingM.size) {
      this.flag("outstanding-count",
        `${lender.outstandingItemCount}!=${this.outstandingM.size}`);
    }
    if (lender.settledCount !== this.settledM.size) {
      this.flag("settled-count", `${lender.settledCount}!=${this.settledM.size}`);
    }
    const total = lender.pendingCount + lender.outstandingItemCount + lender.settledCount;
    if (lender.submitted !== total) {
      this.flag("conservation", `${lender.submitted}!=${total}`);
    }
  }

  doSubmit(): void {
    const index = this.lender.submit(this.submitted);
    if (index !== this.submitted) {
      this.flag("index-assignment", `${index}!=${this.submitted}`);
    }
    this.submitted += 1;
    this.pendingM.add(index);
    this.log.push(`s|${index}`);
  }

  doLend(holder: string, capacity: number): void {
    const limit = this.lender.nextEmit + HIGH_WATER;
    const lease = this.lender.lend(holder, capacity);
    if (lease === null) {
      this.log.push(`l|${holder}|${capacity}|-|`);
      return;
    }
    const indices = lease.items.map((item) => item.index);
    for (const index of indices) {
      if (this.outstandingM.has(index)) this.flag("concurrent-hold", `${index}`);
      if (!this.pendingM.has(index)) this.flag("lend-of-nonpending", `${index}`);
      if (index >= limit) this.flag("backpressure", `${index}`);
      this.pendingM.delete(index);
      this.outstandingM.add(index);
    }
    this.live.push({
      leaseId: lease.leaseId,
      holder,
      toReport: [...indices],
      original: [...indices],
    });
    this.log.push(`l|${holder}|${capacity}|${lease.leaseId}|${csv(indices)}`);
  }

  absorbSettle(res: SettleResult): void {
    for (const index of res.acceptedIndices) {
      if (this.settledM.has(index)) this.flag("double-settle", `${index}`);
      if (this.outstandingM.has(index)) {
        this.outstandingM.delete(index);
      } else if (this.pendingM.has(index)) {
        this.pendingM.delete(index);
      } else {
        this.flag("settle-from-nowhere", `${index}`);
      }
      this.settledM.add(index);
    }
  }

  doSettle(record: LiveLease, count: number, offset: number): void {
    const rem = record.toReport;
    const chosen = Array.from({ length: count }, (_, j) => rem[(offset + j) % rem.length]);
    const results: Array<[number, Json]> = chosen.map((i) => [i, valueOf(i)]);
    const res = this.lender.settle(record.leaseId, results);
    if (res.stale) this.flag("unexpected-stale", record.leaseId);
    this.absorbSettle(res);
    const keep = new Set(rem.filter((i) => !chosen.includes(i)));
    record.toReport = rem.filter((i) => keep.has(i));
    if (record.toReport.length === 0) {
      this.live.splice(this.live.indexOf(record), 1);
      this.ghosts.push([record.leaseId, record.original]);
    }
    this.log.push(
      `t|${record.leaseId}|${csv(chosen)}|${csv(res.acceptedIndices)}` +
      `|${res.duplicates}|${Number(res.stale)}`,
    );
  }

  doLateSettle(): void {
    const [leaseId, indices] = this.ghosts[this.rng.below(this.ghosts.length)];
    const index = indices[this.rng.below(indices.length)];
    const res = this.lender.settle(leaseId, [[index, valueOf(index)]]);
    this.absorbSettle(res);
    this.log.push(
      `z|${leaseId}|${index}|${csv(res.acceptedIndices)}` +
      `|${res.duplicates}|${Number(res.stale)}`,
    );
  }

  doRevoke(holder: string): void {
    const requeued = this.lender.revoke(holder);
    for (const index of requeued) {
      if (!this.outstandingM.has(index)) {
        this.flag("requeue-of-nonoutstanding", `${index}`);
      }
      this.outstandingM.delete(index);
      this.pendingM.add(index);
    }
    for (const record of this.live.filter((r) => r.holder === holder)) {
      this.live.splice(this.live.indexOf(record), 1);
      this.ghosts.push([record.leaseId, record.toReport]);
    }
    this.log.push(`r|${holder}|${csv(requeued)}`);
  }

  doCollect(): void {
    const got = this.lender.collectReady();
    for (const [index, value] of got) {
      if (index !== this.expectedNext) {
        this.flag("emit-order", `${index}!=${this.expectedNext}`);
      }
      if (value !== valueOf(index)) this.flag("emit-value", `${index}`);
      this.expectedNext = index + 1;
      this.emitted += 1;
    }
    const first = got.length > 0 ? `${got[0][0]}` : "-";
    this.log.push(`c|${first}|${got.length}`);
  }

  doClose(): void {
    const done = this.lender.closeInput();
    this.closed = true;
    this.log.push(`x|${Number(done)}`);
  }

  pickEvent(step: number): string {
    const choices: string[] = [];
    if (!this.closed) choices.push("submit", "submit", "submit");
    choices.push("lend", "lend", "lend");
    if (this.live.length > 0) {
      choices.push("settle", "settle", "settle", "settle", "revoke");
    }
    if (this.ghosts.length > 0) choices.push("late", "late");
    choices.push("collect", "collect");
    if (!this.closed && step >= this.ops - Math.floor(this.ops / 8)) {
      choices.push("close");
    }
    return choices[this.rng.below(choices.length)];
  }

  applyOne(kind: string): void {
    if (kind === "submit") {
      this.doSubmit();
    } else if (kind === "lend") {
      const holder = this.holders[this.rng.below(this.nHolders)];
      this.doLend(holder, 1 + this.rng.below(3));
    } else if (kind === "settle") {
      const record = this.live[this.rng.below(this.live.length)];
      const count = 1 + this.rng.below(record.toReport.length);
      const offset = this.rng.below(record.toReport.length);
      this.doSettle(record, count, offset);
    } else if (kind === "late") {
      this.doLateSettle();
    } else if (kind === "revoke") {
      this.doRevoke(this.holders[this.rng.below(this.nHolders)]);
    } else if (kind === "collect") {
      this.doCollect();
    } else {
      this.doClose();
    }
  }

  drive(): void {
    for (let step = 0; step < this.ops; step++) {
      this.stepLabel = `${step}`;
      const kind = this.pickEvent(step);
      try {
        this.applyOne(kind);
      } catch (exc) {
        this.flag("exception", `${kind}:${(exc as Error).constructor.name}`);
        this.aborted = true;
        return;
      }
      this.checkCounts();
    }
    this.finale();
  }

  finale(): void {
    this.stepLabel = "finale";
    try {
      if (!this.closed) this.doClose();
      let guard = 10 * this.submitted + 20;
      while (!this.lender.isDone() && guard > 0) {
        guard -= 1;
        this.doLend(this.holders[0], 8);
        if (this.live.length > 0) {
          const record = this.live[0];
          this.doSettle(record, record.toReport.length, 0);
        }
        this.doCollect();
        this.checkCounts();
      }
      if (!this.lender.isDone()) this.flag("finale-stuck");
    } catch (exc) {
      this.flag("exception", `finale:${(exc as Error).constructor.name}`);
      this.aborted = true;
      return;
    }
    if (this.emitted !== this.submitted || this.expectedNext !== this.submitted) {
      this.flag("lost-or-duplicated", `emitted ${this.emitted} of ${this.submitted}`);
    }
  }
}

async function sha256Hex16(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("")
    .slice(0, 16);
}

export async function interleaveCheck(
  seed: number,
  ops: number,
  factory: (hw: number) => StreamLender = (hw) => new StreamLender(hw),
): Promise<InterleaveVerdict> {
  if (ops < 1) throw new Error("ops must be >= 1");
  const run = new Run(seed, ops, factory);
  run.drive();
  const digest = await sha256Hex16(run.log.join("\n"));
  const out: InterleaveVerdict = {
    seed,
    violations: run.violations,
    trace_digest: digest,
  };
  if (run.firstViolation !== null) out.first_violation = run.firstViolation;
  return out;
}
