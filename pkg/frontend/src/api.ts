/* Typed client for the annotation service HTTP API. */

export interface SceneInfo {
  role: "user" | "agent";
  da: string;
  grounding_sp_ids: string[];
  yesno_outcome: "yes" | "no" | null;
  instruction: string;
}

export interface GroundingText {
  sp_id: string;
  text: string;
}

export interface DocumentExcerpt {
  doc_id: string;
  text: string;
  highlight: [number, number];
}

export interface HistoryTurn {
  turn_id: number;
  role: string;
  da: string;
  utterance: string;
}

export interface ScenePayload {
  done: boolean;
  session_id: string;
  rejected?: boolean;
  turns_written?: number;
  flow_id?: string;
  turn_id?: number;
  total_turns?: number;
  scene?: SceneInfo;
  grounding?: GroundingText[];
  document_excerpt?: DocumentExcerpt | null;
  history?: HistoryTurn[];
}

export interface SessionInfo {
  session_id: string;
  flow_id: string;
  total_turns: number;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && body.detail) detail = String(body.detail);
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(res.status, detail);
}

export class AnnotationApi {
  constructor(private baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  createSession(flowId: string): Promise<SessionInfo> {
    return this.post("/sessions", { flow_id: flowId });
  }

  getScene(sessionId: string): Promise<ScenePayload> {
    return this.get(`/sessions/${sessionId}/scene`);
  }

  submitUtterance(sessionId: string, text: string): Promise<{ ok: boolean; done: boolean }> {
    return this.post(`/sessions/${sessionId}/utterance`, { text });
  }

  rejectScene(sessionId: string, reason: string): Promise<{ ok: boolean }> {
    return this.post(`/sessions/${sessionId}/reject`, { reason });
  }

  async exportDialogues(): Promise<string> {
    const res = await fetch(this.baseUrl + "/export");
    if (!res.ok) await parseError(res);
    return res.text();
  }
}
