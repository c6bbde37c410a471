// Bit-equality against the native implementations: every entry in the
// shared vector file was computed by the native registry and must come
// out identical here, including the rand-test trace digests (which pin
// the whole splitmix64 + lender + driver pipeline, not just the verdict).

import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { REGISTRY } from "../src/processors.js";
import type { Json } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const vectorsPath = join(here, "..", "..", "shared", "vectors.json");

interface Vector {
  processor: string;
  params: Record<string, Json>;
  value: Json;
  expected: Json;
}

const vectors: Vector[] = JSON.parse(readFileSync(vectorsPath, "utf-8"));

describe("shared processor vectors", () => {
  it("covers every browser processor", () => {
    const names = new Set(vectors.map((v) => v.processor));
    for (const name of Object.keys(REGISTRY)) {
      expect(names.has(name), `no vectors for ${name}`).toBe(true);
    }
  });

  for (const [i, vector] of vectors.entries()) {
    it(`${i}: ${vector.processor} matches native output`, async () => {
      const apply = REGISTRY[vector.processor];
      expect(apply, `unknown processor ${vector.processor}`).toBeDefined();
      const got = await apply(vector.params, vector.value);
      expect(got).toEqual(vector.expected);
    }, 30_000);
  }
});
