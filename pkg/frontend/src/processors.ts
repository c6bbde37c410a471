// Browser-side processors, bit-compatible with the native registry: the
// same collatz step rule on big integers, the same SHA-256 hashcash, the
// same integer box blur, and the same splitmix64-driven interleaving
// self-test. The shared vector file holds native-computed expecteds that
// these implementations must reproduce exactly.

import { interleaveCheck } from "./randtest.js";
import type { Json } from "./protocol.js";

export class ItemFailure extends Error {}

export type Apply = (params: Record<string, Json>, value: Json) => Promise<Json>;

function merged(params: Record<string, Json>, value: Json): Record<string, Json> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new ItemFailure(`expected an object value, got ${typeof value}`);
  }
  return { ...params, ...value };
}

function needInt(fields: Record<string, Json>, name: string): number {
  const v = fields[name];
  if (v === undefined) throw new ItemFailure(`missing field: ${name}`);
  if (typeof v !== "number" || !Number.isInteger(v)) {
    throw new ItemFailure(`${name} must be an integer`);
  }
  return v;
}

// ---------------------------------------------------------------------------
// collatz

export function parseBignat(text: Json): bigint {
  if (typeof text !== "string") {
    throw new ItemFailure(`expected a decimal string, got ${typeof text}`);
  }
  if (text.length === 0 || !/^[0-9]+$/.test(text)) {
    throw new ItemFailure(`not a decimal natural: ${JSON.stringify(text.slice(0, 32))}`);
  }
  if (text !== "0" && text.startsWith("0")) {
    throw new ItemFailure(`leading zeros not allowed: ${JSON.stringify(text.slice(0, 32))}`);
  }
  return BigInt(text);
}

export function collatzSteps(n: bigint): number {
  if (n < 1n) throw new ItemFailure("collatz needs n >= 1");
  let steps = 0;
  while (n !== 1n) {
    n = (n & 1n) === 1n ? 3n * n + 1n : n >> 1n;
    steps += 1;
  }
  return steps;
}

async function applyCollatz(params: Record<string, Json>, value: Json): Promise<Json> {
  return collatzSteps(parseBignat(value));
}

// ---------------------------------------------------------------------------
// hashcash

const encoder = new TextEncoder();

export function leadingZeroBits(digest: Uint8Array): number {
  let zeros = 0;
  for (const byte of digest) {
    if (byte === 0) {
      zeros += 8;
      continue;
    }
    let b = byte;
    while ((b & 0x80) === 0) {
      zeros += 1;
      b = (b << 1) & 0xff;
    }
    break;
  }
  return zeros;
}

export async function hashcashSearch(
  block: string,
  difficulty: number,
  nonceStart: number,
  nonceCount: number,
): Promise<number | null> {
  if (difficulty < 0 || difficulty > 256) throw new ItemFailure("difficulty must be in 0..256");
  if (nonceStart < 0) throw new ItemFailure("nonce_start must be >= 0");
  if (nonceCount < 1) throw new ItemFailure("nonce_count must be >= 1");
  const prefix = encoder.encode(block);
  for (let nonce = nonceStart; nonce < nonceStart + nonceCount; nonce++) {
    const tail = encoder.encode(String(nonce));
    const data = new Uint8Array(prefix.length + tail.length);
    data.set(prefix, 0);
    data.set(tail, prefix.length);
    const digest = new Uint8Array(await crypto.subtle.digest("SHA-256", data));
    if (leadingZeroBits(digest) >= difficulty) return nonce;
  }
  return null;
}

async function applyHashcash(params: Record<string, Json>, value: Json): Promise<Json> {
  const fields = merged(params, value);
  const block = fields.block;
  if (block === undefined) throw new ItemFailure("missing field: block");
  if (typeof block !== "string") throw new ItemFailure("block must be a string");
  return hashcashSearch(
    block,
    needInt(fields, "difficulty"),
    needInt(fields, "nonce_start"),
    needInt(fields, "nonce_count"),
  );
}

// ---------------------------------------------------------------------------
// blur

export function boxBlur(width: number, height: number, pixels: number[], radius: number): number[] {
  if (radius === 0) return [...pixels];
  const r = radius;
  const pw = width + 2 * r;
  const ph = height + 2 * r;
  const clamp = (v: number, hi: number) => (v < 0 ? 0 : v > hi ? hi : v);

  // prefix[y][x] = sum over [0,y) x [0,x) of the edge-padded image
  const prefix: number[][] = Array.from({ length: ph + 1 }, () => new Array(pw + 1).fill(0));
  for (let y = 0; y < ph; y++) {
    const srcY = clamp(y - r, height - 1) * width;
    const rowPrev = prefix[y];
    const row = prefix[y + 1];
    let acc = 0;
    for (let x = 0; x < pw; x++) {
      acc += pixels[srcY + clamp(x - r, width - 1)];
      row[x + 1] = acc + rowPrev[x + 1];
    }
  }

  const k = (2 * r + 1) ** 2;
  const side = 2 * r + 1;
  const out = new Array(width * height);
  for (let y = 0; y < height; y++) {
    const top = prefix[y];
    const bottom = prefix[y + side];
    const base = y * width;
    for (let x = 0; x < width; x++) {
      const s = bottom[x + side] - bottom[x] - top[x + side] + top[x];
      out[base + x] = Math.floor((2 * s + k) / (2 * k)); // round half up
    }
  }
  return out;
}

async function applyBlur(params: Record<string, Json>, value: Json): Promise<Json> {
  const fields = merged(params, value);
  const width = needInt(fields, "width");
  const height = needInt(fields, "height");
  const radius = needInt(fields, "radius");
  const pixels = fields.pixels;
  if (width < 1 || height < 1) throw new ItemFailure("width and height must be positive");
  if (!Array.isArray(pixels) || pixels.length !== width * height) {
    throw new ItemFailure("pixels must be a list of width*height values");
  }
  for (const p of pixels) {
    if (typeof p !== "number" || !Number.isInteger(p) || p < 0 || p > 255) {
      throw new ItemFailure("pixel values must be integers in 0..255");
    }
  }
  if (radius < 0) throw new ItemFailure("radius must be a non-negative integer");
  return { width, height, pixels: boxBlur(width, height, pixels as number[], radius) };
}

// ---------------------------------------------------------------------------
// rand-test

async function applyRandTest(params: Record<string, Json>, value: Json): Promise<Json> {
  const fields = merged(params, value);
  const seed = needInt(fields, "seed");
  const ops = needInt(fields, "ops");
  if (seed < 0) throw new ItemFailure("seed must be >= 0");
  if (ops < 1) throw new ItemFailure("ops must be >= 1");
  return (await interleaveCheck(seed, ops)) as unknown as Json;
}

// ---------------------------------------------------------------------------

export const REGISTRY: Record<string, Apply> = {
  collatz: applyCollatz,
  hashcash: applyHashcash,
  blur: applyBlur,
  "rand-test": applyRandTest,
};
