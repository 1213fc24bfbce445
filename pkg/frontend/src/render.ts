import type { Exchange, SessionExport, Thread } from "./types.js";
import {
  activeVersion,
  arrowsVisible,
  imageUrl,
  openThread,
  versionBadge,
} from "./view.js";

type Attrs = Record<string, string | boolean>;

function el(
  tag: string,
  attrs: Attrs = {},
  children: Array<Node | string | null> = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null) continue;
    node.append(child);
  }
  return node;
}

export interface Handlers {
  send(text: string): void;
  lucky(): void;
  redo(index: number): void;
  selectVersion(index: number, version: number): void;
  openThread(index: number): void;
  sendThread(text: string): void;
  closeThread(): void;
  editDescription(column: string, text: string): void;
}

export interface UiState {
  session: SessionExport;
  readonly: boolean;
  pending: boolean;
  toast: string | null;
}

function exchangeNode(
  exchange: Exchange,
  index: number,
  pane: "main" | "thread",
  state: UiState,
  handlers: Handlers,
): HTMLElement {
  const version = activeVersion(exchange);
  const node = el("article", { class: "exchange", "data-index": String(index) });
  node.append(el("div", { class: "user-bubble" }, [exchange.user_text]));

  const reply = el("div", { class: "assistant-bubble" });
  const url = imageUrl(version);
  if (url !== null) {
    // the caption doubles as the accessible description of the chart
    reply.append(el("img", { class: "chart", src: url, alt: version.caption }));
  }
  if (version.caption) {
    reply.append(el("p", { class: "caption" }, [version.caption]));
  }
  if (version.kind === "text") {
    reply.append(el("p", { class: "text-reply" }, [version.raw_llm_text]));
  }

  const disabled = state.pending || state.readonly;
  const controls = el("div", { class: "controls" });
  if (pane === "main") {
    const redo = el("button", { class: "redo", disabled }, ["Redo"]) as HTMLButtonElement;
    redo.addEventListener("click", () => handlers.redo(index));
    controls.append(redo);

    if (arrowsVisible(exchange)) {
      const prev = el("button", {
        class: "ver-prev",
        disabled: disabled || exchange.active_index === 0,
      }) as HTMLButtonElement;
      prev.textContent = "◀";
      prev.addEventListener("click", () =>
        handlers.selectVersion(index, exchange.active_index - 1),
      );
      const next = el("button", {
        class: "ver-next",
        disabled: disabled || exchange.active_index === exchange.versions.length - 1,
      }) as HTMLButtonElement;
      next.textContent = "▶";
      next.addEventListener("click", () =>
        handlers.selectVersion(index, exchange.active_index + 1),
      );
      controls.append(prev, el("span", { class: "ver-badge" }, [versionBadge(exchange) ?? ""]), next);
    }

    if (version.kind === "visualization") {
      const open = el("button", { class: "open-thread", disabled }, ["Refine in thread"]) as HTMLButtonElement;
      open.addEventListener("click", () => handlers.openThread(index));
      controls.append(open);
    }
    if (exchange.thread) {
      controls.append(el("span", { class: "thread-indicator" }, [`thread ${exchange.thread}`]));
    }
  }
  reply.append(controls);
  node.append(reply);
  return node;
}

function composer(
  idPrefix: string,
  placeholder: string,
  state: UiState,
  onSend: (text: string) => void,
): HTMLElement {
  const input = el("input", {
    id: `${idPrefix}-utterance`,
    type: "text",
    placeholder,
    disabled: state.pending || state.readonly,
  }) as HTMLInputElement;
  const send = el("button", {
    id: `${idPrefix}-send`,
    disabled: state.pending || state.readonly,
  }, ["Send"]) as HTMLButtonElement;
  const fire = () => {
    const text = input.value.trim();
    if (!text) return;
    onSend(text);
  };
  send.addEventListener("click", fire);
  input.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") fire();
  });
  return el("div", { class: "composer", id: `${idPrefix}-composer` }, [input, send]);
}

function threadPanel(thread: Thread, state: UiState, handlers: Handlers): HTMLElement {
  const anchor = state.session.main_exchanges[thread.anchor.index];
  const panel = el("aside", { id: "thread-panel", "data-thread": thread.id });
  panel.append(
    el("header", {}, [`Thread ${thread.id} on message ${thread.anchor.index + 1}`]),
  );

  const preview = el("div", { class: "anchor-preview" });
  preview.append(el("span", {}, [anchor.user_text]));
  const anchorImage = imageUrl(activeVersion(anchor));
  if (anchorImage !== null) {
    preview.append(
      el("img", { class: "chart", src: anchorImage, alt: activeVersion(anchor).caption }),
    );
  }
  panel.append(preview);

  const log = el("div", { id: "thread-log" });
  thread.exchanges.forEach((exchange, i) => {
    log.append(exchangeNode(exchange, i, "thread", state, handlers));
  });
  panel.append(log);

  panel.append(composer("thread", "Refine this chart", state, handlers.sendThread));
  const close = el("button", {
    id: "close-thread",
    disabled: state.pending || state.readonly,
  }, ["Close thread"]) as HTMLButtonElement;
  close.addEventListener("click", () => handlers.closeThread());
  panel.append(close);
  return panel;
}

function dictionaryTable(state: UiState, handlers: Handlers): HTMLElement {
  const dictionary = state.session.dictionary;
  const section = el("section", { id: "dictionary" });
  section.append(el("h2", {}, ["Data dictionary"]));
  if (dictionary === null) {
    section.append(el("p", {}, ["No dictionary for this dataset."]));
    return section;
  }
  const table = el("table");
  const head = el("tr");
  for (const label of ["Column Name", "Data Type", "Range or Example", "Description"]) {
    head.append(el("th", {}, [label]));
  }
  table.append(head);
  for (const column of dictionary.columns) {
    const row = el("tr", { "data-column": column.name });
    row.append(el("td", {}, [column.name]));
    row.append(el("td", {}, [column.data_type]));
    row.append(el("td", {}, [column.range_or_example]));
    const input = el("input", {
      class: "desc-edit",
      "data-column": column.name,
      type: "text",
      value: column.description,
      disabled: state.pending || state.readonly,
    }) as HTMLInputElement;
    input.value = column.description;
    input.addEventListener("change", () =>
      handlers.editDescription(column.name, input.value),
    );
    row.append(el("td", {}, [input]));
    table.append(row);
  }
  section.append(table);
  return section;
}

export function render(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";

  const status = el("header", { id: "status" }, [
    el("span", { class: "dataset" }, [state.session.dataset_filename]),
    state.readonly ? el("span", { class: "readonly-flag" }, ["read-only"]) : null,
    state.pending ? el("span", { class: "pending-flag" }, ["working…"]) : null,
  ]);
  root.append(status);

  const chat = el("section", { id: "main-chat" });
  const log = el("div", { id: "chat-log" });
  state.session.main_exchanges.forEach((exchange, i) => {
    log.append(exchangeNode(exchange, i, "main", state, handlers));
  });
  chat.append(log);
  chat.append(composer("main", "Ask about the data", state, handlers.send));
  const lucky = el("button", {
    id: "lucky",
    disabled: state.pending || state.readonly,
  }, ["I'm feeling lucky"]) as HTMLButtonElement;
  lucky.addEventListener("click", () => handlers.lucky());
  chat.append(lucky);
  root.append(chat);

  const thread = openThread(state.session);
  if (thread !== null) {
    root.append(threadPanel(thread, state, handlers));
  }

  root.append(dictionaryTable(state, handlers));

  if (state.toast !== null) {
    root.append(el("div", { id: "toast", role: "alert" }, [state.toast]));
  }
}
