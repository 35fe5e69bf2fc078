import { describe, expect, it } from "vitest";

import { initialState, withSession } from "../src/state.js";
import type { SceneJson } from "../src/types.js";
import { historyRows, instanceRows, sceneSummary, viewPanel } from "../src/view.js";

const scene: SceneJson = {
  id: "s",
  room_type: "toy",
  theme: "red",
  floor: { polygon: [[0, 0]], extent: 6.4, resolution: 64 },
  instances: [
    { asset_id: "toy-a", translation: [0.5, 0.2, -0.25], size: [1, 1, 1], yaw: 0 },
    { asset_id: "toy-b", translation: [1, 0.2, 1], size: [1, 1, 1], yaw: 0 },
  ],
};

describe("instance list", () => {
  it("is empty without a scene", () => {
    expect(instanceRows(initialState())).toEqual([]);
  });

  it("has one row per scene instance, marking the selection", () => {
    const state = { ...withSession(initialState(), "sid", scene), selectedInstance: 1 };
    const rows = instanceRows(state);
    expect(rows).toHaveLength(2);
    expect(rows[0]).toMatchObject({ index: 0, assetId: "toy-a", selected: false });
    expect(rows[1]).toMatchObject({ index: 1, assetId: "toy-b", selected: true });
    expect(rows[0]!.position).toBe("(0.50, 0.20, -0.25)");
  });
});

describe("view panel", () => {
  it("renders no image before a session exists", () => {
    expect(viewPanel(initialState()).imagePath).toBeNull();
  });

  it("points at the server-rendered canonical view", () => {
    const state = { ...withSession(initialState(), "sid", scene), viewIndex: 3 };
    const panel = viewPanel(state);
    expect(panel.imagePath).toBe("/sessions/sid/render?view=3");
    expect(panel.label).toBe("view 4/8");
  });
});

describe("history panel", () => {
  it("shows every action with its seed", () => {
    const rows = historyRows([
      { action: { op: "generate", prompt: "red", w0: 0.3, seed: 42 }, instanceCount: 3 },
      { action: { op: "replace", instanceId: 1, prompt: "blue", seed: 9 }, instanceCount: 3 },
    ]);
    expect(rows[0]!.summary).toContain('generate prompt="red"');
    expect(rows[0]!.seed).toBe(42);
    expect(rows[1]!.summary).toContain("replace #1");
    expect(rows[1]!.seed).toBe(9);
  });
});

describe("scene summary", () => {
  it("describes session and theme", () => {
    expect(sceneSummary(null)).toBe("no session");
    expect(sceneSummary(scene)).toBe("toy · 2 instances · theme red");
  });
});
