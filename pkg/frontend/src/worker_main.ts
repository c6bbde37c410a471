// Web Worker entry: owns the WebSocket and the compute loop so the page
// thread only ever renders status. Frames are handled strictly in
// arrival order; items are processed one at a time between frames, so
// pings are answered even mid-lease.

import { ClientSession } from "./session.js";

interface StartCommand {
  cmd: "start";
  url: string;
}

const scope = self as unknown as {
  postMessage(message: unknown): void;
  onmessage: ((ev: MessageEvent) => void) | null;
};

let session: ClientSession | null = null;

function report(): void {
  if (session !== null) scope.postMessage(session.status());
}

function run(url: string): void {
  session = new ClientSession("browser", 1);
  const ws = new WebSocket(url);
  const inbox: string[] = [];
  let pumping = false;
  let running = true;

  async function pump(): Promise<void> {
    if (pumping) return;
    pumping = true;
    try {
      while (running) {
        const frame = inbox.shift();
        if (frame !== undefined) {
          const step = (session as ClientSession).onFrame(frame);
          for (const out of step.out) ws.send(out);
          running = step.running;
          report();
          continue;
        }
        if ((session as ClientSession).hasWork()) {
          ws.send(await (session as ClientSession).processOne());
          report();
          continue;
        }
        break;
      }
      if (!running) ws.close();
    } catch (exc) {
      (session as ClientSession).reason = `${exc}`;
      running = false;
      try {
        ws.close();
      } catch {
        /* already closing */
      }
    } finally {
      pumping = false;
      report();
    }
  }

  ws.onopen = () => {
    ws.send((session as ClientSession).helloFrame());
    report();
  };
  ws.onmessage = (ev: MessageEvent) => {
    inbox.push(String(ev.data));
    void pump();
  };
  ws.onclose = () => {
    if (session !== null && session.state !== "closed") {
      session.state = "closed";
      if (session.reason === "") session.reason = "disconnected";
    }
    running = false;
    report();
  };
  ws.onerror = () => {
    if (session !== null && session.reason === "") {
      session.reason = "connection error";
    }
    report();
  };
}

scope.onmessage = (ev: MessageEvent) => {
  const data = ev.data as StartCommand;
  if (data && data.cmd === "start") run(data.url);
};
