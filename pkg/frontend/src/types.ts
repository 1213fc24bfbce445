// JSON shapes as the server sends them. The UI never invents conversation
// state of its own; everything below comes back from the API verbatim.

export interface ResponseVersion {
  kind: "visualization" | "text";
  raw_llm_text: string;
  program: string | null;
  image: string | null; // base64 PNG
  caption: string;
  outcome: "success" | "syntax_error" | "runtime_error" | "timeout" | null;
  note: string | null;
}

export interface Exchange {
  user_text: string;
  versions: ResponseVersion[];
  active_index: number;
  thread?: string;
}

export interface ColumnProfile {
  name: string;
  data_type: string;
  range_or_example: string;
  description: string;
}

export interface DataDictionary {
  filename: string;
  columns: ColumnProfile[];
  row_count: number;
  warnings?: string[];
}

export interface Thread {
  id: string;
  anchor: { target: string; index: number };
  original_code: string;
  open: boolean;
  exchanges: Exchange[];
}

export interface SessionExport {
  session_id: string;
  dataset_filename: string;
  dictionary: DataDictionary | null;
  main_exchanges: Exchange[];
  threads: Record<string, Thread>;
}

export interface SessionEnvelope {
  session: SessionExport;
  readonly: boolean;
}

/** Returned by message/redo/version endpoints. */
export interface ExchangeView {
  action: string;
  target: string;
  index: number;
  exchange: Exchange;
  cue?: { error: string; cue: string[] };
}

export interface CloseView {
  thread_id: string;
  anchor: { target: string; index: number };
  promoted: ResponseVersion | null;
}
