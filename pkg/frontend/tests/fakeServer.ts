// In-memory double of the session API, close enough to the real service for
// driving the UI: same routes, same JSON shapes, same version/thread
// semantics. Tests push scripted replies the way the service's mock-script
// mode does.

import type {
  Exchange,
  ResponseVersion,
  SessionExport,
  Thread,
} from "../src/types.js";

export type FakeReply =
  | { kind: "viz"; caption: string }
  | { kind: "text"; text: string }
  | { kind: "error"; outcome: "runtime_error" | "timeout" };

interface RouteResult {
  status: number;
  body: unknown;
}

interface FakeSession {
  export: SessionExport;
  readonly: boolean;
  threadSeq: number;
}

let imageSeq = 0;

function vizVersion(caption: string): ResponseVersion {
  imageSeq += 1;
  return {
    kind: "visualization",
    raw_llm_text: "```python\nplot()\n```",
    program: "plot()",
    image: btoa(`png-bytes-${imageSeq}`),
    caption,
    outcome: "success",
    note: null,
  };
}

function textVersion(text: string): ResponseVersion {
  return {
    kind: "text",
    raw_llm_text: text,
    program: null,
    image: null,
    caption: "",
    outcome: "success",
    note: null,
  };
}

function errorVersion(outcome: "runtime_error" | "timeout"): ResponseVersion {
  return {
    kind: "text",
    raw_llm_text: "```python\nbroken()\n```",
    program: "broken()",
    image: null,
    caption: "",
    outcome,
    note: null,
  };
}

const ERROR_CUE = { error: "system", cue: ["redo", "undo"] };

export class FakeServer {
  sessions = new Map<string, FakeSession>();
  replies: FakeReply[] = [];
  requests: Array<{ method: string; path: string }> = [];
  /** When > 0, each request takes this long (real timers). */
  delayMs = 0;
  private sessionSeq = 0;

  script(...replies: FakeReply[]): void {
    this.replies.push(...replies);
  }

  seedSession(id: string): FakeSession {
    const session: FakeSession = {
      readonly: false,
      threadSeq: 0,
      export: {
        session_id: id,
        dataset_filename: "voyagers.csv",
        dictionary: {
          filename: "voyagers.csv",
          columns: [
            { name: "name", data_type: "string", range_or_example: "Alice", description: "" },
            { name: "age", data_type: "float", range_or_example: "22.0 – 35.0", description: "" },
            { name: "fare", data_type: "float", range_or_example: "7.25 – 71.83", description: "" },
          ],
          row_count: 5,
        },
        main_exchanges: [],
        threads: {},
      },
    };
    this.sessions.set(id, session);
    return session;
  }

  install(): void {
    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) =>
      this.fetch(input, init)) as typeof fetch;
  }

  /** Append an exchange as if another client had spoken; for polling tests. */
  externalSay(sessionId: string, reply: FakeReply): void {
    const session = this.sessions.get(sessionId);
    if (!session) throw new Error(`no session ${sessionId}`);
    this.replies.unshift(reply);
    this.say(session, session.export.main_exchanges, "main", "from elsewhere");
  }

  async fetch(input: RequestInfo | URL, init?: RequestInit): Promise<Response> {
    const path = typeof input === "string" ? input : input.toString();
    const method = (init?.method ?? "GET").toUpperCase();
    this.requests.push({ method, path });
    if (this.delayMs > 0) {
      await new Promise((resolve) => setTimeout(resolve, this.delayMs));
    }
    const result = this.route(method, path, init);
    return new Response(JSON.stringify(result.body), {
      status: result.status,
      headers: { "content-type": "application/json" },
    });
  }

  private nextVersion(): { version: ResponseVersion; cue: typeof ERROR_CUE | null } | null {
    const reply = this.replies.shift();
    if (reply === undefined) return null;
    if (reply.kind === "viz") return { version: vizVersion(reply.caption), cue: null };
    if (reply.kind === "text") return { version: textVersion(reply.text), cue: null };
    return { version: errorVersion(reply.outcome), cue: ERROR_CUE };
  }

  private say(
    session: FakeSession,
    pane: Exchange[],
    target: string,
    text: string,
  ): RouteResult {
    if (!text.trim()) {
      return { status: 400, body: { error: "empty_utterance" } };
    }
    if (text.trim().toLowerCase() === "undo") {
      const removed = pane.pop();
      if (removed === undefined) {
        return { status: 409, body: { error: "nothing_to_undo" } };
      }
      return {
        status: 200,
        body: { action: "undone", target, removed: { user_text: removed.user_text } },
      };
    }
    const produced = this.nextVersion();
    if (produced === null) {
      return { status: 502, body: { error: "llm_transport", detail: "script exhausted" } };
    }
    const exchange: Exchange = {
      user_text: text,
      versions: [produced.version],
      active_index: 0,
    };
    pane.push(exchange);
    const view: Record<string, unknown> = {
      action: "appended",
      target,
      index: pane.length - 1,
      exchange,
    };
    if (produced.cue !== null) view.cue = produced.cue;
    return { status: 200, body: view };
  }

  private route(method: string, path: string, init?: RequestInit): RouteResult {
    const body =
      init?.body !== undefined && typeof init.body === "string"
        ? (JSON.parse(init.body) as Record<string, unknown>)
        : null;

    let match = path.match(/^\/sessions$/);
    if (match !== null && method === "POST") {
      this.sessionSeq += 1;
      const session = this.seedSession(`fake-${this.sessionSeq}`);
      return {
        status: 201,
        body: {
          session_id: session.export.session_id,
          dictionary: session.export.dictionary,
        },
      };
    }

    match = path.match(/^\/sessions\/([^/]+)$/);
    if (match !== null && method === "GET") {
      const session = this.sessions.get(match[1]);
      if (!session) return { status: 404, body: { error: "unknown_session" } };
      return { status: 200, body: { session: session.export, readonly: session.readonly } };
    }

    match = path.match(/^\/sessions\/([^/]+)\/(messages|lucky)$/);
    if (match !== null && method === "POST") {
      const session = this.sessions.get(match[1]);
      if (!session) return { status: 404, body: { error: "unknown_session" } };
      if (session.readonly) return { status: 403, body: { error: "read_only" } };
      const text =
        match[2] === "lucky" ? "show me something interesting" : String(body?.text ?? "");
      return this.say(session, session.export.main_exchanges, "main", text);
    }

    match = path.match(/^\/sessions\/([^/]+)\/messages\/([^/]+)\/(redo|version)$/);
    if (match !== null && method === "POST") {
      const session = this.sessions.get(match[1]);
      if (!session) return { status: 404, body: { error: "unknown_session" } };
      if (session.readonly) return { status: 403, body: { error: "read_only" } };
      const mid = match[2].match(/^main:(\d+):assistant$/);
      if (mid === null) return { status: 400, body: { error: "bad_request" } };
      const exchange = session.export.main_exchanges[Number(mid[1])];
      if (exchange === undefined) {
        return { status: 404, body: { error: "index_range" } };
      }
      if (match[3] === "redo") {
        const produced = this.nextVersion();
        if (produced === null) {
          return { status: 502, body: { error: "llm_transport" } };
        }
        exchange.versions.push(produced.version);
        exchange.active_index = exchange.versions.length - 1;
        const view: Record<string, unknown> = {
          action: "appended",
          target: "main",
          index: Number(mid[1]),
          exchange,
        };
        if (produced.cue !== null) view.cue = produced.cue;
        return { status: 200, body: view };
      }
      const wanted = Number(body?.index);
      if (!Number.isInteger(wanted) || wanted < 0 || wanted >= exchange.versions.length) {
        return { status: 400, body: { error: "index_out_of_range" } };
      }
      exchange.active_index = wanted;
      return {
        status: 200,
        body: { action: "selected", target: "main", index: Number(mid[1]), exchange },
      };
    }

    match = path.match(/^\/sessions\/([^/]+)\/threads$/);
    if (match !== null && method === "POST") {
      const session = this.sessions.get(match[1]);
      if (!session) return { status: 404, body: { error: "unknown_session" } };
      if (session.readonly) return { status: 403, body: { error: "read_only" } };
      const mid = String(body?.anchor_mid ?? "").match(/^main:(\d+):assistant$/);
      if (mid === null) return { status: 400, body: { error: "bad_request" } };
      const anchorIndex = Number(mid[1]);
      const anchor = session.export.main_exchanges[anchorIndex];
      if (anchor === undefined) return { status: 404, body: { error: "index_range" } };
      const active = anchor.versions[anchor.active_index];
      if (active.kind !== "visualization") {
        return { status: 400, body: { error: "no_program_to_refine" } };
      }
      // reopening the same anchor reuses its thread, like the real engine
      for (const thread of Object.values(session.export.threads)) {
        if (thread.anchor.index === anchorIndex) {
          thread.open = true;
          return {
            status: 200,
            body: { thread_id: `${session.export.session_id}.${thread.id}` },
          };
        }
      }
      session.threadSeq += 1;
      const id = `t${session.threadSeq}`;
      const thread: Thread = {
        id,
        anchor: { target: "main", index: anchorIndex },
        original_code: active.program ?? "",
        open: true,
        exchanges: [],
      };
      session.export.threads[id] = thread;
      anchor.thread = id;
      return { status: 200, body: { thread_id: `${session.export.session_id}.${id}` } };
    }

    match = path.match(/^\/threads\/([^/]+)\/(messages|close)$/);
    if (match !== null && method === "POST") {
      const dot = match[1].lastIndexOf(".");
      const session = this.sessions.get(match[1].slice(0, dot));
      const thread = session?.export.threads[match[1].slice(dot + 1)];
      if (!session || !thread) return { status: 404, body: { error: "unknown_thread" } };
      if (session.readonly) return { status: 403, body: { error: "read_only" } };
      if (match[2] === "messages") {
        return this.say(session, thread.exchanges, thread.id, String(body?.text ?? ""));
      }
      if (!thread.open) return { status: 409, body: { error: "already_closed" } };
      thread.open = false;
      let promoted: ResponseVersion | null = null;
      for (let i = thread.exchanges.length - 1; i >= 0; i -= 1) {
        const candidate = thread.exchanges[i].versions[thread.exchanges[i].active_index];
        if (candidate.kind === "visualization") {
          promoted = structuredClone(candidate);
          break;
        }
      }
      if (promoted !== null) {
        const anchor = session.export.main_exchanges[thread.anchor.index];
        anchor.versions.push(promoted);
        anchor.active_index = anchor.versions.length - 1;
      }
      return {
        status: 200,
        body: { thread_id: match[1], anchor: thread.anchor, promoted },
      };
    }

    match = path.match(/^\/sessions\/([^/]+)\/dictionary$/);
    if (match !== null && method === "PATCH") {
      const session = this.sessions.get(match[1]);
      if (!session) return { status: 404, body: { error: "unknown_session" } };
      if (session.readonly) return { status: 403, body: { error: "read_only" } };
      const dictionary = session.export.dictionary;
      const column = dictionary?.columns.find((c) => c.name === body?.column);
      if (!dictionary || !column) {
        return { status: 400, body: { error: "unknown_column" } };
      }
      column.description = String(body?.description ?? "");
      return { status: 200, body: { dictionary } };
    }

    return { status: 404, body: { error: "no_such_route", detail: `${method} ${path}` } };
  }
}
