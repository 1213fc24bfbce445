import type {
  CloseView,
  DataDictionary,
  ExchangeView,
  SessionEnvelope,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  code: string;

  constructor(status: number, code: string, detail?: string) {
    super(detail ? `${code}: ${detail}` : code);
    this.status = status;
    this.code = code;
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "http_error";
  let detail: string | undefined;
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") code = body.error;
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the generic code
  }
  throw new ApiError(response.status, code, detail);
}

/** Thin typed wrapper over the session endpoints. */
export class Api {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method: "POST" };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return fetch(this.url(path), init).then((r) => unwrap<T>(r));
  }

  createSession(csv: Blob, filename: string): Promise<{ session_id: string }> {
    const form = new FormData();
    form.append("file", csv, filename);
    return fetch(this.url("/sessions"), { method: "POST", body: form }).then(
      (r) => unwrap(r),
    );
  }

  getSession(sessionId: string): Promise<SessionEnvelope> {
    return fetch(this.url(`/sessions/${sessionId}`)).then(
      (r) => unwrap<SessionEnvelope>(r),
    );
  }

  sendMessage(sessionId: string, text: string): Promise<ExchangeView> {
    return this.post(`/sessions/${sessionId}/messages`, { text });
  }

  lucky(sessionId: string): Promise<ExchangeView> {
    return this.post(`/sessions/${sessionId}/lucky`);
  }

  redo(sessionId: string, index: number): Promise<ExchangeView> {
    return this.post(`/sessions/${sessionId}/messages/main:${index}:assistant/redo`);
  }

  selectVersion(sessionId: string, index: number, version: number): Promise<ExchangeView> {
    return this.post(`/sessions/${sessionId}/messages/main:${index}:assistant/version`, {
      index: version,
    });
  }

  openThread(sessionId: string, anchorIndex: number): Promise<{ thread_id: string }> {
    return this.post(`/sessions/${sessionId}/threads`, {
      anchor_mid: `main:${anchorIndex}:assistant`,
    });
  }

  sendThreadMessage(compoundId: string, text: string): Promise<ExchangeView> {
    return this.post(`/threads/${compoundId}/messages`, { text });
  }

  closeThread(compoundId: string): Promise<CloseView> {
    return this.post(`/threads/${compoundId}/close`);
  }

  patchDictionary(
    sessionId: string,
    column: string,
    description: string,
  ): Promise<{ dictionary: DataDictionary }> {
    return fetch(this.url(`/sessions/${sessionId}/dictionary`), {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ column, description }),
    }).then((r) => unwrap(r));
  }
}
