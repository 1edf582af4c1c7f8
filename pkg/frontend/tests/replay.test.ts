// Scripted drag sequence against a live local service: the same command
// schedule (keyed to tick indices) must reproduce the identical state trace.

import { spawn, ChildProcess } from "node:child_process";
import { describe, expect, it } from "vitest";
import WebSocket from "ws";

import { TeleopClient } from "../src/client.js";
import { goalCommand, resolverCommand, CommandMessage } from "../src/protocol.js";

const PY = process.env.PYTHON ?? "python3";
const TICK_HZ = 20;

function startService(port: number): ChildProcess {
  return spawn(
    PY,
    ["-m", "jparse.teleop", "--port", String(port), "--model", "planar3r",
     "--tick-hz", String(TICK_HZ)],
    { cwd: "..", stdio: "ignore" },
  );
}

function connectWithRetry(port: number, deadlineMs: number): Promise<WebSocket> {
  return new Promise((resolve, reject) => {
    const start = Date.now();
    const attempt = () => {
      const ws = new WebSocket(`ws://127.0.0.1:${port}/ws`);
      ws.once("open", () => resolve(ws));
      ws.once("error", () => {
        ws.close();
        if (Date.now() - start > deadlineMs) reject(new Error("service not reachable"));
        else setTimeout(attempt, 250);
      });
    };
    attempt();
  });
}

interface TraceRow {
  offset: number;
  q: number[];
  position: number[];
}

// Drag path: goal marches along +y then the resolver threshold changes, the
// way a user sweep across the workspace boundary looks on the wire.
const SCRIPT: Array<{ offset: number; build: (seq: number) => CommandMessage }> = [
  { offset: 0, build: (s) => goalCommand(s, [2.0, 0.5, 0.0]) },
  { offset: 4, build: (s) => goalCommand(s, [2.2, 0.9, 0.0]) },
  { offset: 8, build: (s) => goalCommand(s, [2.4, 1.3, 0.0]) },
  { offset: 12, build: (s) => goalCommand(s, [3.4, 1.6, 0.0]) }, // past the boundary
  { offset: 20, build: (s) => resolverCommand(s, "jparse", { gamma: 0.05, a: 2 }) },
  { offset: 28, build: (s) => goalCommand(s, [1.2, -0.4, 0.0]) },
];
const TRACE_TICKS = 40;

async function runScripted(port: number): Promise<TraceRow[]> {
  const proc = startService(port);
  try {
    const ws = await connectWithRetry(port, 20000);
    const client = new TeleopClient(
      { send: (text) => ws.send(text), get isOpen() { return ws.readyState === WebSocket.OPEN; } },
      { maxRateHz: 1000 },
    );
    const trace: TraceRow[] = [];
    let base: number | null = null;
    let scriptIndex = 0;
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("trace incomplete")), 30000);
      ws.on("message", (data: WebSocket.RawData) => {
        const msg = client.handleIncoming(String(data));
        if (!msg || msg.type !== "state") return;
        const tick = msg.payload.tick;
        if (base === null) base = tick + 1; // commands start on the next tick
        const offset = tick - base;
        while (scriptIndex < SCRIPT.length && SCRIPT[scriptIndex].offset === offset) {
          client.send(SCRIPT[scriptIndex].build(0));
          scriptIndex += 1;
        }
        if (offset >= 0 && offset < TRACE_TICKS) {
          trace.push({ offset, q: msg.payload.q, position: msg.payload.position });
        }
        if (offset >= TRACE_TICKS) {
          clearTimeout(timer);
          resolve();
        }
      });
      ws.on("error", reject);
    });
    ws.close();
    return trace;
  } finally {
    proc.kill("SIGTERM");
  }
}

describe("deterministic replay against a local service", () => {
  it("same seq/tick schedule produces identical traces", { timeout: 90000 }, async () => {
    const a = await runScripted(8972);
    const b = await runScripted(8973);
    expect(a.length).toBe(TRACE_TICKS);
    expect(b.length).toBe(TRACE_TICKS);
    expect(JSON.stringify(a)).toBe(JSON.stringify(b));
    // the drag actually moved the arm
    const dq = a[TRACE_TICKS - 1].q.map((v, i) => Math.abs(v - a[0].q[i]));
    expect(Math.max(...dq)).toBeGreaterThan(1e-3);
  });
});
