/** Pure render models: plain data derived from state, consumed by the DOM
 * glue in main.ts and asserted on directly in tests. */

import type { HistoryEntry, SceneJson, UISessionState } from "./types.js";

export interface InstanceRow {
  index: number;
  assetId: string;
  position: string;
  selected: boolean;
}

/** One row per scene instance — the list mirrors the server scene exactly. */
export function instanceRows(state: UISessionState): InstanceRow[] {
  const scene = state.scene;
  if (!scene) return [];
  return scene.instances.map((inst, index) => ({
    index,
    assetId: inst.asset_id,
    position: `(${inst.translation.map((v) => v.toFixed(2)).join(", ")})`,
    selected: state.selectedInstance === index,
  }));
}

export interface ViewPanelModel {
  viewIndex: number;
  label: string;
  /** null until a session exists */
  imagePath: string | null;
}

export function viewPanel(state: UISessionState): ViewPanelModel {
  return {
    viewIndex: state.viewIndex,
    label: `view ${state.viewIndex + 1}/8`,
    imagePath: state.sessionId
      ? `/sessions/${state.sessionId}/render?view=${state.viewIndex}`
      : null,
  };
}

export interface HistoryRow {
  index: number;
  summary: string;
  seed: number;
}

export function historyRows(history: HistoryEntry[]): HistoryRow[] {
  return history.map((entry, index) => {
    const a = entry.action;
    const summary =
      a.op === "generate"
        ? `generate prompt=${JSON.stringify(a.prompt)} w0=${a.w0} → ${entry.instanceCount} instances`
        : `replace #${a.instanceId} prompt=${JSON.stringify(a.prompt)} → ${entry.instanceCount} instances`;
    return { index, summary, seed: a.seed };
  });
}

export function sceneSummary(scene: SceneJson | null): string {
  if (!scene) return "no session";
  const theme = typeof scene["theme"] === "string" ? ` · theme ${scene["theme"]}` : "";
  return `${scene.room_type} · ${scene.instances.length} instances${theme}`;
}
