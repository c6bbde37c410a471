// StreamLender port: the lending/reorder state machine, kept
// operation-for-operation equivalent to the native implementation so the
// randomized interleaving workload produces bit-identical verdicts.

import type { Json } from "./protocol.js";

export interface Item {
  index: number;
  payload: Json;
}

export interface Lease {
  leaseId: string;
  holder: string;
  items: Item[];
  state: "outstanding" | "settled" | "revoked";
}

export interface SettleResult {
  accepted: number;
  duplicates: number;
  stale: boolean;
  acceptedIndices: number[];
}

export class LenderStateError extends Error {}

export class StreamLender {
  highWater: number;
  nextEmit = 0;
  inputClosed = false;
  duplicates = 0;
  staleSettles = 0;
  requeued = 0;

  private pending: Item[] = [];
  private outstanding = new Map<string, Lease>();
  private reorder = new Map<number, Json>();
  private nextIndex = 0;
  private leaseSeq = 0;
  private holderLeases = new Map<string, Set<string>>();
  private indexLease = new Map<number, string>();
  private unreported = new Map<string, Set<number>>();

  constructor(highWater = 64) {
    if (highWater < 1) throw new Error("highWater must be >= 1");
    this.highWater = highWater;
  }

  get submitted(): number {
    return this.nextIndex;
  }

  get pendingCount(): number {
    return this.pending.length;
  }

  get outstandingItemCount(): number {
    return this.indexLease.size;
  }

  get outstandingLeaseCount(): number {
    return this.outstanding.size;
  }

  get settledCount(): number {
    return this.nextEmit + this.reorder.size;
  }

  isSettled(index: number): boolean {
    return index < this.nextEmit || this.reorder.has(index);
  }

  isAddressable(leaseId: string): boolean {
    return this.unreported.has(leaseId);
  }

  wantsInput(): boolean {
    return !this.inputClosed && this.nextIndex < this.nextEmit + this.highWater;
  }

  isDone(): boolean {
    return (
      this.inputClosed &&
      this.pending.length === 0 &&
      this.outstanding.size === 0 &&
      this.nextEmit === this.nextIndex
    );
  }

  submit(payload: Json): number {
    if (this.inputClosed) throw new LenderStateError("submit after close_input");
    const index = this.nextIndex;
    this.nextIndex += 1;
    this.pending.push({ index, payload });
    return index;
  }

  lend(holder: string, capacity: number): Lease | null {
    if (capacity < 1) throw new Error("capacity must be >= 1");
    const limit = this.nextEmit + this.highWater;
    const taken: Item[] = [];
    while (
      this.pending.length > 0 &&
      taken.length < capacity &&
      this.pending[0].index < limit
    ) {
      taken.push(this.pending.shift() as Item);
    }
    if (taken.length === 0) return null;
    const leaseId = `L${this.leaseSeq}`;
    this.leaseSeq += 1;
    const lease: Lease = { leaseId, holder, items: taken, state: "outstanding" };
    this.outstanding.set(leaseId, lease);
    let mine = this.holderLeases.get(holder);
    if (mine === undefined) {
      mine = new Set();
      this.holderLeases.set(holder, mine);
    }
    mine.add(leaseId);
    for (const item of taken) this.indexLease.set(item.index, leaseId);
    this.unreported.set(leaseId, new Set(taken.map((item) => item.index)));
    return lease;
  }

  settle(leaseId: string, results: Array<[number, Json]>): SettleResult {
    const expected = this.unreported.get(leaseId);
    if (expected === undefined) {
      this.staleSettles += 1;
      return { accepted: 0, duplicates: 0, stale: true, acceptedIndices: [] };
    }
    const acceptedIndices: number[] = [];
    let dups = 0;
    for (const [index, value] of results) {
      if (!expected.has(index)) {
        dups += 1;
        continue;
      }
      expected.delete(index);
      if (this.isSettled(index)) {
        dups += 1;
        continue;
      }
      this.withdraw(index);
      this.reorder.set(index, value);
      acceptedIndices.push(index);
    }
    if (expected.size === 0) this.unreported.delete(leaseId);
    this.duplicates += dups;
    return {
      accepted: acceptedIndices.length,
      duplicates: dups,
      stale: false,
      acceptedIndices,
    };
  }

  revoke(holder: string): number[] {
    const leaseIds = this.holderLeases.get(holder);
    if (leaseIds === undefined || leaseIds.size === 0) {
      this.holderLeases.delete(holder);
      return [];
    }
    this.holderLeases.delete(holder);
    const recovered: Item[] = [];
    for (const leaseId of leaseIds) {
      const lease = this.outstanding.get(leaseId) as Lease;
      this.outstanding.delete(leaseId);
      lease.state = "revoked";
      for (const item of lease.items) {
        this.indexLease.delete(item.index);
        recovered.push(item);
      }
    }
    recovered.sort((a, b) => a.index - b.index);
    this.pending.unshift(...recovered);
    this.requeued += recovered.length;
    return recovered.map((item) => item.index);
  }

  collectReady(): Array<[number, Json]> {
    const out: Array<[number, Json]> = [];
    while (this.reorder.has(this.nextEmit)) {
      const value = this.reorder.get(this.nextEmit) as Json;
      this.reorder.delete(this.nextEmit);
      out.push([this.nextEmit, value]);
      this.nextEmit += 1;
    }
    return out;
  }

  closeInput(): boolean {
    this.inputClosed = true;
    return this.isDone();
  }

  private withdraw(index: number): void {
    const leaseId = this.indexLease.get(index);
    if (leaseId !== undefined) {
      this.indexLease.delete(index);
      const lease = this.outstanding.get(leaseId) as Lease;
      lease.items = lease.items.filter((item) => item.index !== index);
      if (lease.items.length === 0) {
        lease.state = "settled";
        this.outstanding.delete(leaseId);
        const mine = this.holderLeases.get(lease.holder);
        if (mine !== undefined) {
          mine.delete(leaseId);
          if (mine.size === 0) this.holderLeases.delete(lease.holder);
        }
      }
      return;
    }
    const at = this.pending.findIndex((item) => item.index === index);
    if (at >= 0) {
      this.pending.splice(at, 1);
      return;
    }
    throw new Error(`index ${index} unsettled but not held anywhere`);
  }
}
