// Status page: spawns the compute worker and renders its heartbeat.
// Volunteering is: open this page, leave the tab alone.

import type { SessionStatus } from "./session.js";

function el(id: string): HTMLElement {
  return document.getElementById(id) as HTMLElement;
}

interface Sample {
  t: number;
  items: number;
}

const samples: Sample[] = [];

function ratePer10s(items: number): number {
  const now = performance.now();
  samples.push({ t: now, items });
  while (samples.length > 0 && now - samples[0].t > 10_000) samples.shift();
  if (samples.length < 2) return 0;
  const first = samples[0];
  const dt = (now - first.t) / 1000;
  return dt > 0 ? (items - first.items) / dt : 0;
}

function render(status: SessionStatus): void {
  el("state").textContent = status.state;
  el("items").textContent = String(status.items);
  el("rate").textContent = ratePer10s(status.items).toFixed(2);
  el("reason").textContent = status.reason;
  document.body.dataset.state = status.state;
}

function main(): void {
  const proto = location.protocol === "https:" ? "wss://" : "ws://";
  const url = proto + location.host + "/volunteer";
  el("target").textContent = url;
  const worker = new Worker(new URL("./worker_main.js", import.meta.url), {
    type: "module",
  });
  worker.onmessage = (ev: MessageEvent) => render(ev.data as SessionStatus);
  worker.postMessage({ cmd: "start", url });
  render({ state: "connecting", items: 0, busyMs: 0, reason: "" });
}

main();
