import { describe, expect, it } from "vitest";

import { Message, ProtocolError, decodeMessage, encodeMessage } from "../src/protocol.js";

describe("protocol encoding", () => {
  it("hello matches the documented frame", () => {
    expect(encodeMessage({ type: "hello", agent: "native", cores: 2 })).toBe(
      '{"type":"hello","agent":"native","cores":2}',
    );
  });

  it("ping matches the documented frame", () => {
    expect(encodeMessage({ type: "ping", t: 0 })).toBe('{"type":"ping","t":0}');
  });

  it("round-trips every variant", () => {
    const samples: Message[] = [
      { type: "hello", agent: "browser", cores: 1, worker_id: "w9" },
      {
        type: "welcome",
        worker_id: "w1",
        task: { processor: "collatz", params: { a: [1, null, "x"] } },
        window: 2,
      },
      {
        type: "lease",
        lease_id: "L3",
        items: [
          { index: 0, value: "6" },
          { index: 1, value: { nested: true } },
        ],
      },
      { type: "result", lease_id: "L3", index: 1, value: 8, elapsed_ms: 1.5 },
      { type: "item_error", lease_id: "L3", index: 0, message: "bad" },
      { type: "ping", t: 123.25 },
      { type: "pong", t: 123.25 },
      { type: "bye" },
    ];
    for (const msg of samples) {
      const frame = encodeMessage(msg);
      expect(frame.includes("\n")).toBe(false);
      expect(decodeMessage(frame)).toEqual(msg);
    }
  });

  it("rejects unknown types, bad fields, and extras", () => {
    expect(() => decodeMessage('{"type":"warp"}')).toThrow(ProtocolError);
    expect(() => decodeMessage('{"type":"hello","agent":"x"}')).toThrow(/cores/);
    expect(() =>
      decodeMessage('{"type":"result","lease_id":"L","index":-1,"value":0,"elapsed_ms":0}'),
    ).toThrow(/index/);
    expect(() => decodeMessage('{"type":"bye","extra":1}')).toThrow(/extra/);
    expect(() => decodeMessage("{nope")).toThrow(ProtocolError);
    expect(() => decodeMessage('{"type":"lease","lease_id":"L","items":[]}')).toThrow(/items/);
  });
});
