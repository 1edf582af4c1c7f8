import { describe, expect, it } from "vitest";

import type { StateMessage } from "../src/protocol.js";
import { TRACE_CAPACITY, ViewState } from "../src/view.js";

function stateMessage(tick: number, x: number): StateMessage {
  return {
    type: "state",
    seq: tick,
    payload: {
      tick,
      t: tick * 0.05,
      mode: "goal_follow",
      q: [0, 0],
      q_dot: [0, 0],
      joint_positions: [[0, 0, 0], [x, 0, 0]],
      position: [x, 0.1, 0.2],
      sigma: [1, 1],
      inv_cond: 1,
      manipulability: 1,
      singular_flags: [false, false],
      gamma: 0.1,
      ellipse_axes: [[1, 0], [0, 1]],
      speed_bound_ok: true,
      warnings: [],
      resolver: { algorithm: "jparse", params: { gamma: 0.1, a: 0 } },
      gains: { k_pos: 1, k_ori: 1, dt: 0.05, twist_cap: 1 },
      goal: null,
    },
  };
}

describe("ViewState", () => {
  it("keeps the trace ring buffer bounded", () => {
    const view = new ViewState();
    for (let i = 0; i < TRACE_CAPACITY + 500; i++) {
      view.acceptState(stateMessage(i, i * 1e-3));
    }
    expect(view.trace("top")).toHaveLength(TRACE_CAPACITY);
    expect(view.conditionHistory).toHaveLength(TRACE_CAPACITY);
    // oldest entries were evicted
    expect(view.trace("top")[0].x).toBeCloseTo(500 * 1e-3, 9);
  });

  it("separates top and side trace planes", () => {
    const view = new ViewState();
    view.acceptState(stateMessage(0, 2.0));
    expect(view.trace("top")[0]).toMatchObject({ x: 2.0, y: 0.1 });
    expect(view.trace("side")[0]).toMatchObject({ x: 2.0, y: 0.2 });
  });

  it("records error banners without touching the last good frame", () => {
    const view = new ViewState();
    view.acceptState(stateMessage(0, 1.0));
    view.acceptError("bad message");
    expect(view.errorBanner).toBe("bad message");
    expect(view.latest?.position[0]).toBe(1.0);
  });
});
