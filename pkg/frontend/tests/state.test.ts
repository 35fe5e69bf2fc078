import { describe, expect, it } from "vitest";

import {
  applyGenerate,
  cycleView,
  failMutation,
  initialState,
  replayRequest,
  selectInstance,
  setSeed,
  setW0,
  withSession,
} from "../src/state.js";
import type { GenerateResponse, SceneJson } from "../src/types.js";

const scene: SceneJson = {
  id: "s",
  room_type: "toy",
  floor: { polygon: [[0, 0]], extent: 6.4, resolution: 64 },
  instances: [
    { asset_id: "a", translation: [0, 0, 0], size: [1, 1, 1], yaw: 0 },
    { asset_id: "b", translation: [1, 0, 1], size: [1, 1, 1], yaw: 0 },
  ],
};

describe("view cycling", () => {
  it("wraps 0 -> 7 -> 0 in both directions", () => {
    let s = initialState();
    expect(s.viewIndex).toBe(0);
    s = cycleView(s, -1);
    expect(s.viewIndex).toBe(7);
    s = cycleView(s, 1);
    expect(s.viewIndex).toBe(0);
    for (let i = 0; i < 8; i++) s = cycleView(s, 1);
    expect(s.viewIndex).toBe(0);
  });
});

describe("instance selection", () => {
  it("accepts valid indices and null", () => {
    let s = withSession(initialState(), "sid", scene);
    s = selectInstance(s, 1);
    expect(s.selectedInstance).toBe(1);
    s = selectInstance(s, null);
    expect(s.selectedInstance).toBeNull();
  });

  it("rejects out-of-range indices without changing the selection", () => {
    let s = withSession(initialState(), "sid", scene);
    s = selectInstance(s, 0);
    s = selectInstance(s, 5);
    expect(s.selectedInstance).toBe(0);
    expect(s.error).toContain("5");
  });
});

describe("prompt weight slider", () => {
  it("clamps to the working range with an off position at 0", () => {
    const s = initialState();
    expect(setW0(s, 0).w0).toBe(0);
    expect(setW0(s, 0.1).w0).toBe(0.2);
    expect(setW0(s, 0.35).w0).toBe(0.35);
    expect(setW0(s, 0.9).w0).toBe(0.5);
  });
});

describe("mutations", () => {
  const response: GenerateResponse = {
    scene,
    trace: { steps: [], truncated: false },
    seed: 42,
  };

  it("applyGenerate replaces the scene mirror wholesale and records the echoed seed", () => {
    let s = withSession(initialState(), "sid", { ...scene, instances: [] });
    s = applyGenerate(s, { prompt: "red", w0: 0.3 }, response);
    expect(s.scene).toBe(response.scene); // verbatim server object
    expect(s.history).toHaveLength(1);
    expect(s.history[0]!.action.seed).toBe(42);
    expect(s.history[0]!.instanceCount).toBe(2);
    expect(s.busy).toBe(false);
  });

  it("failMutation keeps scene and history untouched", () => {
    let s = withSession(initialState(), "sid", scene);
    s = applyGenerate(s, { prompt: "", w0: 0 }, response);
    const before = s;
    s = failMutation(s, "conflict");
    expect(s.scene).toBe(before.scene);
    expect(s.history).toEqual(before.history);
    expect(s.error).toBe("conflict");
  });

  it("seed field may be cleared back to server-chosen", () => {
    let s = initialState();
    s = setSeed(s, 7);
    expect(s.seed).toBe(7);
    s = setSeed(s, null);
    expect(s.seed).toBeNull();
  });
});

describe("replayRequest", () => {
  it("reissues a generate with the stored seed verbatim", () => {
    const req = replayRequest({ op: "generate", prompt: "red", w0: 0.3, seed: 42 });
    expect(req).toEqual({
      kind: "generate",
      body: { prompt: "red", w0: 0.3, seed: 42 },
    });
  });

  it("reissues a replace against the stored instance", () => {
    const req = replayRequest({ op: "replace", instanceId: 1, prompt: "blue", seed: 9 });
    expect(req).toEqual({
      kind: "replace",
      body: { instance_id: 1, prompt: "blue", seed: 9 },
    });
  });
});
