// Wire protocol shared with the teleoperation service: JSON text frames
// {type, seq, payload}. Client seq must increase strictly per connection.

export interface StatePayload {
  tick: number;
  t: number;
  mode: "goal_follow" | "direct_twist";
  q: number[];
  q_dot: number[];
  joint_positions: number[][]; // joint origins then end-effector, world frame
  position: number[];
  sigma: number[];
  inv_cond: number;
  manipulability: number;
  singular_flags: boolean[];
  gamma: number;
  ellipse_axes: number[][]; // rows = shown coordinates, columns = sigma_i * u_i
  speed_bound_ok: boolean;
  warnings: string[];
  resolver: { algorithm: string; params: Record<string, number> };
  gains: { k_pos: number; k_ori: number; dt: number; twist_cap: number };
  goal: { position: number[]; axis: number[]; angle: number } | null;
}

export interface StateMessage {
  type: "state";
  seq: number;
  payload: StatePayload;
}

export interface ErrorMessage {
  type: "error";
  seq: number;
  payload: { message: string; in_reply_to?: number | null };
}

export type ServerMessage = StateMessage | ErrorMessage;

export interface CommandMessage {
  type: "set_goal" | "set_twist" | "set_resolver" | "set_gains" | "reset";
  seq: number;
  payload: Record<string, unknown>;
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as { type?: unknown; seq?: unknown; payload?: unknown };
  if (typeof msg.seq !== "number" || typeof msg.payload !== "object" || msg.payload === null) {
    return null;
  }
  if (msg.type === "state") {
    const p = msg.payload as Partial<StatePayload>;
    if (!Array.isArray(p.q) || !Array.isArray(p.sigma) || !Array.isArray(p.joint_positions)) {
      return null;
    }
    return doc as StateMessage;
  }
  if (msg.type === "error") {
    const p = msg.payload as { message?: unknown };
    if (typeof p.message !== "string") return null;
    return doc as ErrorMessage;
  }
  return null;
}

export function resolverCommand(
  seq: number,
  algorithm: string,
  params: Record<string, number>,
): CommandMessage {
  return { type: "set_resolver", seq, payload: { algorithm, params } };
}

export function goalCommand(seq: number, position: number[], axis?: number[], angle?: number): CommandMessage {
  const payload: Record<string, unknown> = { position };
  if (axis && angle !== undefined) {
    payload.axis = axis;
    payload.angle = angle;
  }
  return { type: "set_goal", seq, payload };
}
