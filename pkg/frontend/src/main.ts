// Browser entry: connects to the teleoperation service, renders the arm,
// and maps pointer drags plus parameter controls onto wire commands.
// Configure the endpoint with ?host=..&port=.. query parameters.

import { TeleopClient } from "./client.js";
import { goalCommand, resolverCommand, StatePayload } from "./protocol.js";
import {
  drawConditionStrip,
  drawFrame,
  screenToWorld,
  ViewPlane,
  Viewport,
} from "./render.js";
import { ViewState } from "./view.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8765";

const canvas = document.getElementById("arm") as HTMLCanvasElement;
const strip = document.getElementById("strip") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const statusEl = document.getElementById("status") as HTMLSpanElement;
const planeToggle = document.getElementById("plane") as HTMLSelectElement;
const algoSelect = document.getElementById("algorithm") as HTMLSelectElement;
const gammaSlider = document.getElementById("gamma") as HTMLInputElement;
const aSlider = document.getElementById("shape-a") as HTMLInputElement;
const lambdaSlider = document.getElementById("lambda") as HTMLInputElement;
const readout = document.getElementById("readout") as HTMLDivElement;

const view = new ViewState();
const viewport: Viewport = {
  width: canvas.width,
  height: canvas.height,
  scale: 180,
  centerWorld: [0.4, 0.6],
};

const ws = new WebSocket(`ws://${host}:${port}/ws`);
const client = new TeleopClient(
  { send: (text) => ws.send(text), get isOpen() { return ws.readyState === WebSocket.OPEN; } },
  { maxRateHz: 30 },
);

ws.onopen = () => { view.status = "connected"; statusEl.textContent = "connected"; };
ws.onclose = () => { view.status = "disconnected"; statusEl.textContent = "disconnected"; };
ws.onerror = () => { view.status = "disconnected"; statusEl.textContent = "error"; };
ws.onmessage = (ev: MessageEvent) => {
  const msg = client.handleIncoming(String(ev.data));
  if (!msg) {
    view.acceptError("malformed message; keeping last good frame");
    return;
  }
  if (msg.type === "state") {
    view.acceptState(msg);
    // throttle gate: one queued command may go out per received state
    client.flush();
  } else {
    view.acceptError(msg.payload.message);
  }
};

function currentPlane(): ViewPlane {
  return planeToggle.value === "side" ? "side" : "top";
}

function sendResolver(): void {
  const algorithm = algoSelect.value;
  const params: Record<string, number> = {};
  if (algorithm === "jparse") {
    params.gamma = Number(gammaSlider.value);
    params.a = Number(aSlider.value);
  } else if (algorithm === "dls") {
    params.lambda = Number(lambdaSlider.value);
  } else if (algorithm === "adls") {
    params.lambda0 = Number(lambdaSlider.value);
    params.w0 = 0.25;
  } else if (algorithm === "edls") {
    params.sigma_minus = 0.0;
    params.sigma_plus = 0.3;
    params.beta = 0.02;
  }
  client.send(resolverCommand(0, algorithm, params));
}

algoSelect.addEventListener("change", sendResolver);
gammaSlider.addEventListener("change", sendResolver);
aSlider.addEventListener("change", sendResolver);
lambdaSlider.addEventListener("change", sendResolver);

function goalFromPointer(ev: PointerEvent): number[] {
  const rect = canvas.getBoundingClientRect();
  const sx = ev.clientX - rect.left;
  const sy = ev.clientY - rect.top;
  const [wx, wy] = screenToWorld(viewport, [sx, sy]);
  const latest = view.latest;
  const z = latest ? latest.position[2] : 0.5;
  const y = latest ? latest.position[1] : 0.0;
  // top view drags in the horizontal plane at the current height; side view
  // drags in the vertical x-z plane at the current y
  return currentPlane() === "top" ? [wx, wy, z] : [wx, y, wy];
}

function sendGoal(ev: PointerEvent): void {
  const sent = client.send(goalCommand(0, goalFromPointer(ev)));
  if (!sent && view.status !== "connected") {
    // one command stays queued for reconnect; anything further is dropped
    view.acceptError("disconnected: goal queued, further drags dropped");
  }
}

let dragging = false;
canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  sendGoal(ev);
});
canvas.addEventListener("pointermove", (ev) => {
  if (dragging) sendGoal(ev);
});
window.addEventListener("pointerup", () => { dragging = false; });

function frame(): void {
  const ctx = canvas.getContext("2d");
  const stripCtx = strip.getContext("2d");
  if (ctx && view.latest) {
    drawFrame(ctx, view.latest as StatePayload, viewport, currentPlane(), view.trace(currentPlane()));
  }
  if (stripCtx && view.latest) {
    drawConditionStrip(stripCtx, view.conditionHistory, view.latest.gamma, strip.width, strip.height);
  }
  if (view.errorBanner) {
    banner.textContent = view.errorBanner;
    banner.style.display = "block";
  } else {
    banner.style.display = "none";
  }
  if (view.latest) {
    const p = view.latest;
    const warn = p.warnings.length ? `  WARN: ${p.warnings[p.warnings.length - 1]}` : "";
    readout.textContent =
      `tick ${p.tick}  1/cond ${p.inv_cond.toFixed(4)}  ` +
      `manip ${p.manipulability.toExponential(2)}  ` +
      `resolver ${p.resolver.algorithm}${warn}`;
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
