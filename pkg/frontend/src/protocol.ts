// Wire protocol: one JSON object per WebSocket text frame, tagged by
// "type". Mirrors the coordinator's schema; decoding is strict so a
// skewed peer fails loudly instead of being misread.

export type Json = null | boolean | number | string | Json[] | { [k: string]: Json };

export interface TaskSpec {
  processor: string;
  params: Record<string, Json>;
}

export interface Hello {
  type: "hello";
  agent: string;
  cores: number;
  worker_id?: string;
}

export interface Welcome {
  type: "welcome";
  worker_id: string;
  task: TaskSpec;
  window: number;
}

export interface WireItem {
  index: number;
  value: Json;
}

export interface LeaseGrant {
  type: "lease";
  lease_id: string;
  items: WireItem[];
}

export interface Result {
  type: "result";
  lease_id: string;
  index: number;
  value: Json;
  elapsed_ms: number;
}

export interface ItemErrorMsg {
  type: "item_error";
  lease_id: string;
  index: number;
  message: string;
}

export interface Ping {
  type: "ping";
  t: number;
}

export interface Pong {
  type: "pong";
  t: number;
}

export interface ByeMsg {
  type: "bye";
}

export type Message =
  | Hello
  | Welcome
  | LeaseGrant
  | Result
  | ItemErrorMsg
  | Ping
  | Pong
  | ByeMsg;

export class ProtocolError extends Error {
  field?: string;

  constructor(message: string, field?: string) {
    super(message);
    this.field = field;
  }
}

const FIELDS: Record<string, { required: string[]; optional?: string[] }> = {
  hello: { required: ["agent", "cores"], optional: ["worker_id"] },
  welcome: { required: ["worker_id", "task", "window"] },
  lease: { required: ["lease_id", "items"] },
  result: { required: ["lease_id", "index", "value", "elapsed_ms"] },
  item_error: { required: ["lease_id", "index", "message"] },
  ping: { required: ["t"] },
  pong: { required: ["t"] },
  bye: { required: [] },
};

function isObject(x: unknown): x is Record<string, Json> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function checkFields(obj: Record<string, Json>, tag: string): void {
  const spec = FIELDS[tag];
  for (const name of spec.required) {
    if (!(name in obj)) throw new ProtocolError(`missing field: ${name}`, name);
  }
  const allowed = new Set([...spec.required, ...(spec.optional ?? []), "type"]);
  for (const name of Object.keys(obj)) {
    if (!allowed.has(name)) throw new ProtocolError(`unexpected field: ${name}`, name);
  }
}

function asString(obj: Record<string, Json>, name: string): string {
  const v = obj[name];
  if (typeof v !== "string") throw new ProtocolError(`field ${name} must be a string`, name);
  return v;
}

function asInt(obj: Record<string, Json>, name: string, minimum: number): number {
  const v = obj[name];
  if (typeof v !== "number" || !Number.isInteger(v)) {
    throw new ProtocolError(`field ${name} must be an integer`, name);
  }
  if (v < minimum) throw new ProtocolError(`field ${name} must be >= ${minimum}`, name);
  return v;
}

function asNumber(obj: Record<string, Json>, name: string, minimum: number): number {
  const v = obj[name];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolError(`field ${name} must be a number`, name);
  }
  if (v < minimum) throw new ProtocolError(`field ${name} must be >= ${minimum}`, name);
  return v;
}

export function encodeMessage(m: Message): string {
  // field order matches the native encoder so transcripts line up
  switch (m.type) {
    case "hello": {
      const obj: Record<string, Json> = { type: "hello", agent: m.agent, cores: m.cores };
      if (m.worker_id !== undefined) obj.worker_id = m.worker_id;
      return JSON.stringify(obj);
    }
    case "welcome":
      return JSON.stringify({
        type: "welcome",
        worker_id: m.worker_id,
        task: { processor: m.task.processor, params: m.task.params },
        window: m.window,
      });
    case "lease":
      return JSON.stringify({ type: "lease", lease_id: m.lease_id, items: m.items });
    case "result":
      return JSON.stringify({
        type: "result",
        lease_id: m.lease_id,
        index: m.index,
        value: m.value,
        elapsed_ms: m.elapsed_ms,
      });
    case "item_error":
      return JSON.stringify({
        type: "item_error",
        lease_id: m.lease_id,
        index: m.index,
        message: m.message,
      });
    case "ping":
      return JSON.stringify({ type: "ping", t: m.t });
    case "pong":
      return JSON.stringify({ type: "pong", t: m.t });
    case "bye":
      return JSON.stringify({ type: "bye" });
  }
}

export function decodeMessage(frame: string): Message {
  let obj: Json;
  try {
    obj = JSON.parse(frame);
  } catch (err) {
    throw new ProtocolError(`malformed JSON: ${err}`);
  }
  if (!isObject(obj)) throw new ProtocolError("frame is not a JSON object");
  const tag = obj.type;
  if (tag === undefined) throw new ProtocolError("missing field: type", "type");
  if (typeof tag !== "string" || !(tag in FIELDS)) {
    throw new ProtocolError(`unknown message type: ${JSON.stringify(tag)}`, "type");
  }
  checkFields(obj, tag);
  switch (tag) {
    case "hello": {
      const msg: Hello = {
        type: "hello",
        agent: asString(obj, "agent"),
        cores: asInt(obj, "cores", 1),
      };
      if ("worker_id" in obj) msg.worker_id = asString(obj, "worker_id");
      return msg;
    }
    case "welcome": {
      const task = obj.task;
      if (!isObject(task)) throw new ProtocolError("field task must be an object", "task");
      const keys = Object.keys(task).sort();
      if (keys.join(",") !== "params,processor") {
        throw new ProtocolError("field task must have processor and params", "task");
      }
      if (typeof task.processor !== "string" || task.processor === "") {
        throw new ProtocolError("field task.processor must be a non-empty string", "task.processor");
      }
      if (!isObject(task.params)) {
        throw new ProtocolError("field task.params must be an object", "task.params");
      }
      return {
        type: "welcome",
        worker_id: asString(obj, "worker_id"),
        task: { processor: task.processor, params: task.params },
        window: asInt(obj, "window", 1),
      };
    }
    case "lease": {
      const raw = obj.items;
      if (!Array.isArray(raw) || raw.length === 0) {
        throw new ProtocolError("field items must be a non-empty array", "items");
      }
      const items: WireItem[] = raw.map((entry) => {
        if (!isObject(entry) || Object.keys(entry).sort().join(",") !== "index,value") {
          throw new ProtocolError("lease items must be {index, value} objects", "items");
        }
        return { index: asInt(entry, "index", 0), value: entry.value as Json };
      });
      return { type: "lease", lease_id: asString(obj, "lease_id"), items };
    }
    case "result":
      return {
        type: "result",
        lease_id: asString(obj, "lease_id"),
        index: asInt(obj, "index", 0),
        value: obj.value as Json,
        elapsed_ms: asNumber(obj, "elapsed_ms", 0),
      };
    case "item_error":
      return {
        type: "item_error",
        lease_id: asString(obj, "lease_id"),
        index: asInt(obj, "index", 0),
        message: asString(obj, "message"),
      };
    case "ping":
      return { type: "ping", t: asNumber(obj, "t", 0) };
    case "pong":
      return { type: "pong", t: asNumber(obj, "t", 0) };
    default:
      return { type: "bye" };
  }
}
