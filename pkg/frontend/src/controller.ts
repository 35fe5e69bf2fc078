import { ApiClient, ConflictError, SessionNotFoundError } from "./api.js";
import {
  applyGenerate,
  applyReplace,
  beginMutation,
  failMutation,
  initialState,
  replayRequest,
  withSession,
} from "./state.js";
import type { UISessionState } from "./types.js";

/** Orchestrates state transitions around service calls. One in-flight
 * mutation per session is enforced client-side via the `busy` flag; the
 * server's 409 is surfaced as a retry prompt if we race anyway. */
export class SessionController {
  state: UISessionState = initialState();

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: UISessionState) => void = () => {},
  ) {}

  private set(next: UISessionState) {
    this.state = next;
    this.onChange(next);
  }

  async createFromFloor(floor: [number, number][], roomType: string): Promise<void> {
    const sessionId = await this.api.createSession({ floor, room_type: roomType });
    const scene = await this.api.getScene(sessionId);
    this.set(withSession(this.state, sessionId, scene));
  }

  async refreshScene(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const scene = await this.api.getScene(this.state.sessionId);
      this.set({ ...this.state, scene });
    } catch (e) {
      if (e instanceof SessionNotFoundError) {
        this.set({ ...initialState(), error: "session expired" });
      } else {
        throw e;
      }
    }
  }

  async generate(): Promise<void> {
    const { sessionId, prompt, w0, seed, busy } = this.state;
    if (!sessionId || busy) return;
    this.set(beginMutation(this.state));
    try {
      const response = await this.api.generate(sessionId, {
        prompt: prompt || undefined,
        w0,
        ...(seed !== null ? { seed } : {}),
      });
      this.set(applyGenerate(this.state, { prompt, w0 }, response));
    } catch (e) {
      this.set(failMutation(this.state, this.describe(e)));
    }
  }

  async replace(): Promise<void> {
    const { sessionId, selectedInstance, prompt, seed, busy } = this.state;
    if (!sessionId || busy) return;
    if (selectedInstance === null) {
      this.set(failMutation(this.state, "select an instance to replace"));
      return;
    }
    this.set(beginMutation(this.state));
    try {
      const response = await this.api.replace(sessionId, {
        instance_id: selectedInstance,
        prompt,
        ...(seed !== null ? { seed } : {}),
      });
      this.set(applyReplace(this.state, { instanceId: selectedInstance, prompt }, response));
    } catch (e) {
      this.set(failMutation(this.state, this.describe(e)));
    }
  }

  /** Reissue a stored action with its recorded seed. */
  async replayEntry(historyIndex: number): Promise<void> {
    const entry = this.state.history[historyIndex];
    const { sessionId, busy } = this.state;
    if (!entry || !sessionId || busy) return;
    const req = replayRequest(entry.action);
    this.set(beginMutation(this.state));
    try {
      if (req.kind === "generate") {
        const response = await this.api.generate(sessionId, req.body);
        this.set(
          applyGenerate(
            this.state,
            { prompt: req.body.prompt ?? "", w0: req.body.w0 ?? 0 },
            response,
          ),
        );
      } else {
        const response = await this.api.replace(sessionId, req.body);
        this.set(
          applyReplace(
            this.state,
            { instanceId: req.body.instance_id, prompt: req.body.prompt },
            response,
          ),
        );
      }
    } catch (e) {
      this.set(failMutation(this.state, this.describe(e)));
    }
  }

  private describe(e: unknown): string {
    if (e instanceof ConflictError) return "another edit is in progress — retry in a moment";
    if (e instanceof SessionNotFoundError) return "session expired";
    if (e instanceof Error) return e.message;
    return String(e);
  }
}
