import { Api, ApiError } from "./api.js";
import { render } from "./render.js";
import type { Handlers } from "./render.js";
import type { SessionEnvelope, SessionExport } from "./types.js";
import { openThread } from "./view.js";

const POLL_MS = 1000;

export class App {
  session: SessionExport | null = null;
  readonly = false;
  pending = false;
  private toast: string | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private lastEnvelope = "";

  constructor(
    private api: Api,
    private sessionId: string,
    private root: HTMLElement,
  ) {}

  async init(): Promise<void> {
    await this.refresh();
  }

  /** Poll for changes made by other clients; pending mutations pause it. */
  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.poll(), POLL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private apply(envelope: SessionEnvelope): void {
    this.session = envelope.session;
    this.readonly = envelope.readonly;
    this.lastEnvelope = JSON.stringify(envelope);
  }

  private async refresh(): Promise<void> {
    this.apply(await this.api.getSession(this.sessionId));
    this.render();
  }

  private async poll(): Promise<void> {
    if (this.pending) return;
    let envelope: SessionEnvelope;
    try {
      envelope = await this.api.getSession(this.sessionId);
    } catch {
      return; // transient fetch failure; keep the current view
    }
    if (JSON.stringify(envelope) === this.lastEnvelope) return;
    this.apply(envelope);
    this.render();
  }

  /** One mutation at a time; the server enforces this too, but the UI
   * should not even race itself. */
  private async mutate(op: () => Promise<unknown>): Promise<void> {
    if (this.pending) return;
    this.pending = true;
    this.toast = null;
    this.render();
    try {
      const view = await op();
      const cue = (view as { cue?: unknown } | null)?.cue;
      if (cue) {
        this.toast = 'The program failed to run. Redo this response, or type "undo".';
      }
    } catch (error) {
      this.toast = error instanceof ApiError ? error.message : String(error);
    }
    this.pending = false;
    try {
      await this.refresh();
    } catch {
      this.render();
    }
  }

  private compound(threadId: string): string {
    return `${this.sessionId}.${threadId}`;
  }

  private handlers(): Handlers {
    return {
      send: (text) => void this.mutate(() => this.api.sendMessage(this.sessionId, text)),
      lucky: () => void this.mutate(() => this.api.lucky(this.sessionId)),
      redo: (index) => void this.mutate(() => this.api.redo(this.sessionId, index)),
      selectVersion: (index, version) =>
        void this.mutate(() => this.api.selectVersion(this.sessionId, index, version)),
      openThread: (index) =>
        void this.mutate(() => this.api.openThread(this.sessionId, index)),
      sendThread: (text) => {
        const thread = this.session === null ? null : openThread(this.session);
        if (thread === null) return;
        void this.mutate(() =>
          this.api.sendThreadMessage(this.compound(thread.id), text),
        );
      },
      closeThread: () => {
        const thread = this.session === null ? null : openThread(this.session);
        if (thread === null) return;
        // the endpoint must succeed before the panel disappears; the panel
        // hides on the next render because the server marks the thread closed
        void this.mutate(() => this.api.closeThread(this.compound(thread.id)));
      },
      editDescription: (column, text) => {
        // optimistic: the input already shows the typed text; a failed PATCH
        // rolls back because the next render uses the server's value
        void this.mutate(() => this.api.patchDictionary(this.sessionId, column, text));
      },
    };
  }

  private render(): void {
    if (this.session === null) return;
    render(
      this.root,
      {
        session: this.session,
        readonly: this.readonly,
        pending: this.pending,
        toast: this.toast,
      },
      this.handlers(),
    );
  }
}
