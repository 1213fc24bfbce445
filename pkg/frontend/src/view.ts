import type { Exchange, ResponseVersion, SessionExport, Thread } from "./types.js";

export function activeVersion(exchange: Exchange): ResponseVersion {
  return exchange.versions[exchange.active_index];
}

/** "2/3"-style badge; null when there is nothing to navigate. */
export function versionBadge(exchange: Exchange): string | null {
  if (exchange.versions.length < 2) return null;
  return `${exchange.active_index + 1}/${exchange.versions.length}`;
}

export function arrowsVisible(exchange: Exchange): boolean {
  return exchange.versions.length > 1;
}

/** Executed-but-failed responses carry the Redo/Undo cue. */
export function hasErrorCue(version: ResponseVersion): boolean {
  return version.outcome === "runtime_error" || version.outcome === "timeout";
}

/** The thread the side panel should show: the newest still-open one. */
export function openThread(session: SessionExport): Thread | null {
  let best: Thread | null = null;
  let bestSeq = -1;
  for (const thread of Object.values(session.threads)) {
    if (!thread.open) continue;
    const seq = parseInt(thread.id.slice(1), 10);
    if (seq > bestSeq) {
      best = thread;
      bestSeq = seq;
    }
  }
  return best;
}

export function imageUrl(version: ResponseVersion): string | null {
  return version.image === null ? null : `data:image/png;base64,${version.image}`;
}
