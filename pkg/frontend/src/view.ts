// Client-side view state: connection status, last state message, and a
// bounded trace of recent end-effector points. Rendering reads this
// synchronously and never blocks on the network.

import type { StateMessage, StatePayload } from "./protocol.js";
import type { TracePoint } from "./render.js";

export const TRACE_CAPACITY = 2000;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export class ViewState {
  status: ConnectionStatus = "connecting";
  latest: StatePayload | null = null;
  errorBanner: string | null = null;
  private traceTop: TracePoint[] = [];
  private traceSide: TracePoint[] = [];
  conditionHistory: number[] = [];

  acceptState(msg: StateMessage): void {
    this.latest = msg.payload;
    const p = msg.payload.position;
    this.pushTrace(this.traceTop, { x: p[0], y: p[1], invCond: msg.payload.inv_cond });
    this.pushTrace(this.traceSide, { x: p[0], y: p[2], invCond: msg.payload.inv_cond });
    this.conditionHistory.push(msg.payload.inv_cond);
    if (this.conditionHistory.length > TRACE_CAPACITY) {
      this.conditionHistory.shift();
    }
  }

  acceptError(message: string): void {
    this.errorBanner = message;
  }

  trace(plane: "top" | "side"): TracePoint[] {
    return plane === "top" ? this.traceTop : this.traceSide;
  }

  private pushTrace(buffer: TracePoint[], point: TracePoint): void {
    buffer.push(point);
    if (buffer.length > TRACE_CAPACITY) buffer.shift();
  }
}
