import { describe, expect, it } from "vitest";

import { TeleopClient, Transport } from "../src/client.js";

class FakeTransport implements Transport {
  sent: string[] = [];
  isOpen = true;
  send(text: string): void {
    this.sent.push(text);
  }
}

function makeClient(rateHz = 10) {
  const transport = new FakeTransport();
  let nowMs = 0;
  const client = new TeleopClient(transport, { maxRateHz: rateHz, now: () => nowMs });
  return { transport, client, advance: (ms: number) => { nowMs += ms; } };
}

describe("TeleopClient", () => {
  it("assigns strictly increasing seq numbers", () => {
    const { transport, client, advance } = makeClient();
    client.send({ type: "reset", payload: {} });
    advance(200);
    client.send({ type: "reset", payload: {} });
    advance(200);
    client.send({ type: "reset", payload: {} });
    const seqs = transport.sent.map((s) => JSON.parse(s).seq);
    expect(seqs).toEqual([1, 2, 3]);
  });

  it("throttles to the configured rate, keeping the newest command", () => {
    const { transport, client, advance } = makeClient(10); // >= 100 ms apart
    expect(client.send({ type: "set_goal", payload: { position: [1, 0, 0] } })).toBe(true);
    advance(10);
    expect(client.send({ type: "set_goal", payload: { position: [2, 0, 0] } })).toBe(false);
    advance(10);
    expect(client.send({ type: "set_goal", payload: { position: [3, 0, 0] } })).toBe(false);
    expect(client.pendingCount).toBe(1);
    advance(100);
    expect(client.flush()).toBe(true);
    expect(transport.sent).toHaveLength(2);
    const last = JSON.parse(transport.sent[1]);
    expect(last.payload.position).toEqual([3, 0, 0]); // newest wins
    expect(last.seq).toBe(2); // renumbered at dispatch
  });

  it("queues at most one message while disconnected", () => {
    const { transport, client, advance } = makeClient();
    transport.isOpen = false;
    client.send({ type: "set_goal", payload: { position: [1, 0, 0] } });
    client.send({ type: "set_goal", payload: { position: [2, 0, 0] } });
    expect(client.pendingCount).toBe(1);
    expect(transport.sent).toHaveLength(0);
    transport.isOpen = true;
    advance(1000);
    client.flush();
    expect(transport.sent).toHaveLength(1);
    expect(JSON.parse(transport.sent[0]).payload.position).toEqual([2, 0, 0]);
  });

  it("routes parsed states to the handler and ignores junk", () => {
    const { client } = makeClient();
    const seen: string[] = [];
    client.onState = (msg) => seen.push(msg.type);
    client.handleIncoming("garbage");
    client.handleIncoming(JSON.stringify({ type: "error", seq: 1, payload: { message: "x" } }));
    expect(seen).toEqual(["error"]);
  });
});
