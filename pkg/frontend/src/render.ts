// Pure drawing geometry. Everything here derives from the latest state
// message alone; the client never recomputes kinematics, so the view cannot
// disagree with the service about the spectrum.

import type { StatePayload } from "./protocol.js";

export type ViewPlane = "top" | "side";

// Orthographic projections: top = world (x, y), side = world (x, z).
export function projectPoint(p: number[], plane: ViewPlane): [number, number] {
  return plane === "top" ? [p[0], p[1]] : [p[0], p[2]];
}

export interface Viewport {
  width: number;   // canvas px
  height: number;
  scale: number;   // px per meter
  centerWorld: [number, number]; // world coords mapped to the canvas center
}

// screen = center + scale * (world - centerWorld), with screen y flipped.
export function worldToScreen(v: Viewport, w: [number, number]): [number, number] {
  return [
    v.width / 2 + v.scale * (w[0] - v.centerWorld[0]),
    v.height / 2 - v.scale * (w[1] - v.centerWorld[1]),
  ];
}

export function screenToWorld(v: Viewport, s: [number, number]): [number, number] {
  return [
    (s[0] - v.width / 2) / v.scale + v.centerWorld[0],
    -(s[1] - v.height / 2) / v.scale + v.centerWorld[1],
  ];
}

export interface EllipseAxis {
  length: number;          // full-space axis length == sigma_i
  direction: [number, number]; // projected unit direction (0 if degenerate)
  flagged: boolean;
}

// Principal axes of the manipulability ellipse from the streamed
// sigma_i * u_i columns. Lengths use the full-space norm so they equal the
// streamed singular values exactly; directions are the view-plane shadows.
export function ellipseAxes(state: StatePayload, plane: ViewPlane): EllipseAxis[] {
  const rows = state.ellipse_axes;
  const m = rows[0]?.length ?? 0;
  const out: EllipseAxis[] = [];
  for (let i = 0; i < m; i++) {
    const full = rows.map((r) => r[i]);
    const length = Math.hypot(...full);
    let dir: [number, number];
    if (rows.length >= 3) {
      dir = plane === "top" ? [full[0], full[1]] : [full[0], full[2]];
    } else {
      dir = [full[0] ?? 0, full[1] ?? 0];
    }
    const n = Math.hypot(dir[0], dir[1]);
    out.push({
      length,
      direction: n > 1e-12 ? [dir[0] / n, dir[1] / n] : [0, 0],
      flagged: state.singular_flags[i] ?? false,
    });
  }
  return out;
}

export interface TracePoint {
  x: number;
  y: number;
  invCond: number;
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  state: StatePayload,
  viewport: Viewport,
  plane: ViewPlane,
  trace: TracePoint[],
): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);

  // end-effector trace, tinted by singularity proximity
  for (const p of trace) {
    ctx.fillStyle = p.invCond < state.gamma ? "#d9534f" : "#9ec9e2";
    const [sx, sy] = worldToScreen(viewport, [p.x, p.y]);
    ctx.fillRect(sx - 1, sy - 1, 2, 2);
  }

  // links
  ctx.strokeStyle = "#222";
  ctx.lineWidth = 4;
  ctx.beginPath();
  state.joint_positions.forEach((jp, i) => {
    const [sx, sy] = worldToScreen(viewport, projectPoint(jp, plane));
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();

  // joints
  ctx.fillStyle = "#555";
  for (const jp of state.joint_positions.slice(0, -1)) {
    const [sx, sy] = worldToScreen(viewport, projectPoint(jp, plane));
    ctx.beginPath();
    ctx.arc(sx, sy, 5, 0, 2 * Math.PI);
    ctx.fill();
  }

  // manipulability ellipse at the end-effector (degenerates to a segment
  // as sigma_min -> 0)
  const ee = projectPoint(state.position, plane);
  const [ex, ey] = worldToScreen(viewport, ee);
  const axes = ellipseAxes(state, plane);
  const ellipseScale = 0.25 * viewport.scale;
  for (const axis of axes) {
    ctx.strokeStyle = axis.flagged ? "#d9534f" : "#2b8a3e";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(
      ex - axis.direction[0] * axis.length * ellipseScale,
      ey + axis.direction[1] * axis.length * ellipseScale,
    );
    ctx.lineTo(
      ex + axis.direction[0] * axis.length * ellipseScale,
      ey - axis.direction[1] * axis.length * ellipseScale,
    );
    ctx.stroke();
  }
  const [a0, a1] = axes;
  if (a0 && a1 && a0.direction[0] * a0.direction[0] + a0.direction[1] * a0.direction[1] > 0) {
    ctx.strokeStyle = "#2b8a3e";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.ellipse(
      ex, ey,
      Math.max(a0.length * ellipseScale, 0.5),
      Math.max(a1.length * ellipseScale, 0.5),
      -Math.atan2(a0.direction[1], a0.direction[0]),
      0, 2 * Math.PI,
    );
    ctx.stroke();
  }

  // goal marker
  if (state.goal) {
    const [gx, gy] = worldToScreen(viewport, projectPoint(state.goal.position, plane));
    ctx.strokeStyle = "#e8590c";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(gx - 7, gy);
    ctx.lineTo(gx + 7, gy);
    ctx.moveTo(gx, gy - 7);
    ctx.lineTo(gx, gy + 7);
    ctx.stroke();
  }
}

export function drawConditionStrip(
  ctx: CanvasRenderingContext2D,
  history: number[],
  gamma: number,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#f4f4f4";
  ctx.fillRect(0, 0, width, height);
  const yOf = (v: number) => height - Math.min(v, 1.0) * height;
  // threshold line
  ctx.strokeStyle = "#d9534f";
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.moveTo(0, yOf(gamma));
  ctx.lineTo(width, yOf(gamma));
  ctx.stroke();
  ctx.setLineDash([]);
  // trace
  ctx.strokeStyle = "#1971c2";
  ctx.beginPath();
  history.forEach((v, i) => {
    const x = (i / Math.max(history.length - 1, 1)) * width;
    if (i === 0) ctx.moveTo(x, yOf(v));
    else ctx.lineTo(x, yOf(v));
  });
  ctx.stroke();
}
