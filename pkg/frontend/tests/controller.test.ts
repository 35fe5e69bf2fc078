import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { selectInstance, setPrompt, setSeed } from "../src/state.js";
import { instanceRows } from "../src/view.js";
import { MockService } from "./mockService.js";

function setup() {
  const service = new MockService();
  const controller = new SessionController(new ApiClient("", service.fetch));
  return { service, controller };
}

const FLOOR: [number, number][] = [
  [-2, -2],
  [2, -2],
  [2, 2],
  [-2, 2],
];

describe("SessionController", () => {
  it("mirrors the server scene after every action", async () => {
    const { service, controller } = setup();
    await controller.createFromFloor(FLOOR, "toy");
    const sid = controller.state.sessionId!;
    expect(controller.state.scene).toEqual(service.serverScene(sid));

    await controller.generate();
    expect(controller.state.scene).toEqual(service.serverScene(sid));
    expect(instanceRows(controller.state)).toHaveLength(
      service.serverScene(sid).instances.length,
    );

    controller.state = selectInstance(controller.state, 0);
    controller.state = setPrompt(controller.state, "red");
    await controller.replace();
    expect(controller.state.scene).toEqual(service.serverScene(sid));
    expect(instanceRows(controller.state)).toHaveLength(
      service.serverScene(sid).instances.length,
    );
  });

  it("records the echoed seed for every action", async () => {
    const { controller } = setup();
    await controller.createFromFloor(FLOOR, "toy");
    controller.state = setSeed(controller.state, 11);
    await controller.generate();
    controller.state = setSeed(controller.state, null);
    await controller.generate();
    const seeds = controller.state.history.map((h) => h.action.seed);
    expect(seeds[0]).toBe(11);
    expect(typeof seeds[1]).toBe("number"); // server-chosen, still recorded
  });

  it("replace without a selection fails non-destructively", async () => {
    const { controller } = setup();
    await controller.createFromFloor(FLOOR, "toy");
    await controller.generate();
    const scene = controller.state.scene;
    await controller.replace();
    expect(controller.state.error).toMatch(/select/);
    expect(controller.state.scene).toBe(scene);
  });

  it("surfaces 409 as a retry prompt and keeps state intact", async () => {
    const { service, controller } = setup();
    await controller.createFromFloor(FLOOR, "toy");
    await controller.generate();
    const before = controller.state;
    service.lock(controller.state.sessionId!);
    await controller.generate();
    expect(controller.state.error).toMatch(/retry/);
    expect(controller.state.scene).toBe(before.scene);
    expect(controller.state.history).toEqual(before.history);
    expect(controller.state.busy).toBe(false);
  });

  it("expired session shows a session-expired banner", async () => {
    const { service, controller } = setup();
    await controller.createFromFloor(FLOOR, "toy");
    service.sessions.delete(controller.state.sessionId!);
    await controller.refreshScene();
    expect(controller.state.error).toBe("session expired");
    expect(controller.state.sessionId).toBeNull();
  });

  it("history replay with the stored seed reproduces the identical scene", async () => {
    const { controller } = setup();
    await controller.createFromFloor(FLOOR, "toy");
    controller.state = setSeed(controller.state, 21);
    await controller.generate();
    const afterFirst = controller.state.scene!;
    const firstAdded = afterFirst.instances[afterFirst.instances.length - 1];

    // replaying the stored (operation, seed) pair yields the same instance
    await controller.replayEntry(0);
    const afterReplay = controller.state.scene!;
    expect(afterReplay.instances[afterReplay.instances.length - 1]).toEqual(firstAdded);
    expect(controller.state.history).toHaveLength(2);
    expect(controller.state.history[1]!.action.seed).toBe(21);
  });
});
