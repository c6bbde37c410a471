// ClientSession: the browser worker's protocol state machine, transport
// and UI agnostic. Feed it inbound frames, send what it returns, and let
// it chew through queued items one at a time; the conformance suite
// replays recorded native sessions against exactly this class.

import {
  ByeMsg,
  ItemErrorMsg,
  Message,
  ProtocolError,
  Result,
  TaskSpec,
  decodeMessage,
  encodeMessage,
  type Json,
} from "./protocol.js";
import { Apply, ItemFailure, REGISTRY } from "./processors.js";

export type SessionState = "connecting" | "working" | "closed";

export interface SessionStatus {
  state: SessionState;
  items: number;
  busyMs: number;
  reason: string;
}

interface QueuedItem {
  leaseId: string;
  index: number;
  value: Json;
}

export class ClientSession {
  agent: string;
  cores: number;
  state: SessionState = "connecting";
  task: TaskSpec | null = null;
  apply: Apply | null = null;
  window = 0;
  workerId: string | null = null;
  items = 0;
  busyMs = 0;
  reason = "";
  private queue: QueuedItem[] = [];
  private now: () => number;

  constructor(agent = "browser", cores = 1, now: () => number = () => performance.now()) {
    this.agent = agent;
    this.cores = cores;
    this.now = now;
  }

  helloFrame(): string {
    return encodeMessage({ type: "hello", agent: this.agent, cores: this.cores });
  }

  status(): SessionStatus {
    return { state: this.state, items: this.items, busyMs: this.busyMs, reason: this.reason };
  }

  /** Returns frames to send and whether the session should keep running. */
  onFrame(frame: string): { out: string[]; running: boolean } {
    const msg = decodeMessage(frame);
    switch (msg.type) {
      case "welcome": {
        if (this.state !== "connecting") throw new ProtocolError("unexpected second welcome");
        this.workerId = msg.worker_id;
        this.task = msg.task;
        this.window = msg.window;
        const apply = REGISTRY[msg.task.processor];
        if (apply === undefined) {
          this.state = "closed";
          this.reason = `unknown processor: ${msg.task.processor}`;
          const bye: ByeMsg = { type: "bye" };
          return { out: [encodeMessage(bye)], running: false };
        }
        this.apply = apply;
        this.state = "working";
        return { out: [], running: true };
      }
      case "lease": {
        if (this.state !== "working") throw new ProtocolError("lease before welcome");
        for (const item of msg.items) {
          this.queue.push({ leaseId: msg.lease_id, index: item.index, value: item.value });
        }
        return { out: [], running: true };
      }
      case "ping":
        return { out: [encodeMessage({ type: "pong", t: msg.t })], running: true };
      case "bye":
        this.state = "closed";
        return { out: [], running: false };
      default:
        throw new ProtocolError(`unexpected message: ${msg.type}`);
    }
  }

  hasWork(): boolean {
    return this.queue.length > 0;
  }

  async processOne(): Promise<string> {
    const item = this.queue.shift() as QueuedItem;
    const start = this.now();
    let msg: Result | ItemErrorMsg;
    try {
      const value = await (this.apply as Apply)((this.task as TaskSpec).params, item.value);
      const elapsed = this.now() - start;
      this.busyMs += elapsed;
      msg = {
        type: "result",
        lease_id: item.leaseId,
        index: item.index,
        value,
        elapsed_ms: Math.round(elapsed * 1000) / 1000,
      };
    } catch (exc) {
      const message =
        exc instanceof ItemFailure
          ? exc.message
          : `${(exc as Error).constructor.name}: ${(exc as Error).message}`;
      msg = { type: "item_error", lease_id: item.leaseId, index: item.index, message };
    }
    this.items += 1;
    return encodeMessage(msg);
  }
}
