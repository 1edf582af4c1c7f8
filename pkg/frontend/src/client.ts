// Teleoperation client: sequenced commands out, parsed states in.
// The transport is injected so tests can drive it without a browser socket.

import {
  CommandMessage,
  ServerMessage,
  parseServerMessage,
} from "./protocol.js";

export interface Transport {
  send(text: string): void;
  readonly isOpen: boolean;
}

export interface ClientOptions {
  // command rate ceiling; at most one command per 1/maxRateHz seconds
  maxRateHz: number;
  now?: () => number; // injectable clock (ms), defaults to Date.now
}

export class TeleopClient {
  private seq = 0;
  private lastSendMs = -Infinity;
  private queued: CommandMessage | null = null;
  private readonly now: () => number;
  onState: ((msg: ServerMessage) => void) | null = null;

  constructor(private transport: Transport, private options: ClientOptions) {
    this.now = options.now ?? (() => Date.now());
  }

  get nextSeq(): number {
    return this.seq + 1;
  }

  handleIncoming(raw: string): ServerMessage | null {
    const msg = parseServerMessage(raw);
    if (msg && this.onState) this.onState(msg);
    return msg;
  }

  // Returns true if sent now, false if throttled/queued/dropped.
  send(command: Omit<CommandMessage, "seq">): boolean {
    const msg: CommandMessage = { ...command, seq: this.nextSeq } as CommandMessage;
    if (!this.transport.isOpen) {
      // hold at most one message while disconnected, then drop
      this.queued = { ...msg };
      return false;
    }
    const minGapMs = 1000 / this.options.maxRateHz;
    const t = this.now();
    if (t - this.lastSendMs < minGapMs) {
      this.queued = { ...msg };
      return false;
    }
    this.dispatch(msg, t);
    return true;
  }

  // Called on a timer (or per received state) to release a throttled command.
  flush(): boolean {
    if (!this.queued || !this.transport.isOpen) return false;
    const minGapMs = 1000 / this.options.maxRateHz;
    const t = this.now();
    if (t - this.lastSendMs < minGapMs) return false;
    const msg = this.queued;
    this.queued = null;
    this.dispatch(msg, t);
    return true;
  }

  get pendingCount(): number {
    return this.queued ? 1 : 0;
  }

  private dispatch(msg: CommandMessage, t: number): void {
    msg.seq = ++this.seq; // renumber at dispatch so seq stays increasing
    this.transport.send(JSON.stringify(msg));
    this.lastSendMs = t;
  }
}
