/** JSON shapes exchanged with the scene-editing HTTP service. */

export interface InstanceJson {
  asset_id: string;
  translation: [number, number, number];
  size: [number, number, number];
  yaw: number;
}

export interface FloorJson {
  polygon: [number, number][];
  extent: number;
  resolution: number;
}

/** Extra scene attributes (e.g. a style theme) appear as additional
 * top-level keys, mirrored verbatim. */
export interface SceneJson {
  id: string;
  room_type: string;
  floor: FloorJson;
  instances: InstanceJson[];
  [extra: string]: unknown;
}

export interface TraceStepJson {
  step: number;
  asset_id: string | null;
  transform: number[] | null;
  stop_probability: number;
}

export interface TraceJson {
  steps: TraceStepJson[];
  truncated: boolean;
}

export interface GenerateResponse {
  scene: SceneJson;
  trace: TraceJson;
  seed: number;
}

export interface ReplaceResponse {
  scene: SceneJson;
  seed: number;
}

export type HistoryAction =
  | { op: "generate"; prompt: string; w0: number; seed: number }
  | { op: "replace"; instanceId: number; prompt: string; seed: number };

export interface HistoryEntry {
  action: HistoryAction;
  /** instance count after the action, for display */
  instanceCount: number;
}

/** Client mirror of one editing session. The scene is never mutated locally:
 * every field of `scene` comes verbatim from the last server response. */
export interface UISessionState {
  sessionId: string | null;
  scene: SceneJson | null;
  selectedInstance: number | null;
  prompt: string;
  w0: number;
  seed: number | null;
  viewIndex: number;
  history: HistoryEntry[];
  error: string | null;
  busy: boolean;
}
