import type {
  GenerateResponse,
  HistoryAction,
  ReplaceResponse,
  SceneJson,
  UISessionState,
} from "./types.js";

export const N_VIEWS = 8;

/** Prompt-weight slider range: off at 0, working range 0.2–0.5. */
export const W0_MIN = 0.2;
export const W0_MAX = 0.5;
export const W0_OFF = 0;

export function initialState(): UISessionState {
  return {
    sessionId: null,
    scene: null,
    selectedInstance: null,
    prompt: "",
    w0: W0_OFF,
    seed: null,
    viewIndex: 0,
    history: [],
    error: null,
    busy: false,
  };
}

/** All transitions return fresh state; the scene mirror is only ever replaced
 * wholesale with a server response, never edited in place. */

export function withSession(
  state: UISessionState,
  sessionId: string,
  scene: SceneJson,
): UISessionState {
  return { ...initialState(), sessionId, scene };
}

export function cycleView(state: UISessionState, delta: 1 | -1): UISessionState {
  const viewIndex = (state.viewIndex + delta + N_VIEWS) % N_VIEWS;
  return { ...state, viewIndex };
}

export function selectInstance(state: UISessionState, index: number | null): UISessionState {
  if (index !== null) {
    const count = state.scene?.instances.length ?? 0;
    if (index < 0 || index >= count) return { ...state, error: `no instance ${index}` };
  }
  return { ...state, selectedInstance: index, error: null };
}

export function setPrompt(state: UISessionState, prompt: string): UISessionState {
  return { ...state, prompt };
}

export function setW0(state: UISessionState, w0: number): UISessionState {
  const clamped = w0 === W0_OFF ? W0_OFF : Math.min(W0_MAX, Math.max(W0_MIN, w0));
  return { ...state, w0: clamped };
}

export function setSeed(state: UISessionState, seed: number | null): UISessionState {
  return { ...state, seed };
}

export function beginMutation(state: UISessionState): UISessionState {
  return { ...state, busy: true, error: null };
}

export function failMutation(state: UISessionState, message: string): UISessionState {
  // non-destructive: scene mirror and history stay untouched
  return { ...state, busy: false, error: message };
}

export function applyGenerate(
  state: UISessionState,
  request: { prompt: string; w0: number },
  response: GenerateResponse,
): UISessionState {
  const action: HistoryAction = {
    op: "generate",
    prompt: request.prompt,
    w0: request.w0,
    seed: response.seed, // echoed seed: every visible scene is reproducible
  };
  return {
    ...state,
    busy: false,
    error: null,
    scene: response.scene,
    history: [...state.history, { action, instanceCount: response.scene.instances.length }],
  };
}

export function applyReplace(
  state: UISessionState,
  request: { instanceId: number; prompt: string },
  response: ReplaceResponse,
): UISessionState {
  const action: HistoryAction = {
    op: "replace",
    instanceId: request.instanceId,
    prompt: request.prompt,
    seed: response.seed,
  };
  return {
    ...state,
    busy: false,
    error: null,
    scene: response.scene,
    history: [...state.history, { action, instanceCount: response.scene.instances.length }],
  };
}

/** Request descriptor to reissue a history entry verbatim (stored seed
 * included) — the service guarantees an identical scene for the same seed
 * from the same state. */
export function replayRequest(action: HistoryAction):
  | { kind: "generate"; body: { prompt?: string; w0?: number; seed: number } }
  | { kind: "replace"; body: { instance_id: number; prompt: string; seed: number } } {
  if (action.op === "generate") {
    return {
      kind: "generate",
      body: { prompt: action.prompt || undefined, w0: action.w0, seed: action.seed },
    };
  }
  return {
    kind: "replace",
    body: { instance_id: action.instanceId, prompt: action.prompt, seed: action.seed },
  };
}
