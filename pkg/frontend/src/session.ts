/* Session state machine, UI-agnostic. One writer completes a whole flow in
 * order; the server is the source of truth, the controller never mutates
 * scene annotations. Typed text is preserved across failed requests. */

import { AnnotationApi, ScenePayload } from "./api.js";

export type Phase = "idle" | "loading" | "writing" | "done" | "rejected" | "error";

export interface SessionState {
  phase: Phase;
  sessionId: string | null;
  scene: ScenePayload | null;
  draft: string;
  error: string | null;
  turnsWritten: number;
}

type Listener = (state: SessionState) => void;

export class SessionController {
  private state: SessionState = {
    phase: "idle",
    sessionId: null,
    scene: null,
    draft: "",
    error: null,
    turnsWritten: 0,
  };
  private listeners: Listener[] = [];
  private lastOp: (() => Promise<void>) | null = null;

  constructor(private api: AnnotationApi) {}

  getState(): SessionState {
    return this.state;
  }

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  setDraft(text: string): void {
    this.update({ draft: text });
  }

  canSubmit(): boolean {
    return this.state.phase === "writing" && this.state.draft.trim().length > 0;
  }

  async start(flowId: string): Promise<void> {
    this.lastOp = () => this.start(flowId);
    this.update({ phase: "loading", error: null });
    try {
      const info = await this.api.createSession(flowId);
      this.update({ sessionId: info.session_id });
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Resume an existing session (e.g. after reloading the page). */
  async resume(sessionId: string): Promise<void> {
    this.lastOp = () => this.resume(sessionId);
    this.update({ sessionId, phase: "loading", error: null });
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const scene = await this.api.getScene(this.state.sessionId);
      if (scene.done) {
        this.update({
          scene,
          phase: scene.rejected ? "rejected" : "done",
          turnsWritten: scene.turns_written ?? this.state.turnsWritten,
        });
      } else {
        this.update({ scene, phase: "writing" });
      }
    } catch (err) {
      this.fail(err);
    }
  }

  async submit(): Promise<void> {
    const { sessionId, draft } = this.state;
    if (!sessionId || !this.canSubmit()) return;
    this.lastOp = () => this.submit();
    this.update({ phase: "loading", error: null });
    try {
      await this.api.submitUtterance(sessionId, draft.trim());
      // clear the draft only once the server accepted the turn
      this.update({ draft: "", turnsWritten: this.state.turnsWritten + 1 });
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  async reject(reason: string): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId || this.state.phase !== "writing") return;
    this.lastOp = () => this.reject(reason);
    this.update({ phase: "loading", error: null });
    try {
      await this.api.rejectScene(sessionId, reason);
      await this.refresh();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Re-run the operation that failed; the draft is untouched. */
  async retry(): Promise<void> {
    if (this.lastOp) await this.lastOp();
  }

  private fail(err: unknown): void {
    const message = err instanceof Error ? err.message : String(err);
    this.update({ phase: "error", error: message });
  }
}
