"""Deterministic transcript replay, discourse-chunk trees, utterance classification."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import posixpath
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .conversation import MAIN, MessageRef
from .engine import EngineConfig, SessionEngine
from .errors import BadTranscript, InvalidStep, ScriptExhausted, ThreadvizError
from .executor import ExecutionLimits
from .gateway import LlmClient, MockBackend, MockScript
from .store import SessionStore, canonical_bytes

TRANSCRIPT_VERSION = 1
REPLAY_EPOCH = "1970-01-01T00:00:00+00:00"

# Main-chat utterances that mark a fresh start of the conversation. They are
# sent to the model like any other utterance; only the tree builder treats
# them as chunk boundaries.
MARKER_UTTERANCES = {"start over", "reset"}

INTERROGATIVE = "interrogative"
IMPERATIVE = "imperative"
DECLARATIVE = "declarative"

STEP_ACTIONS = {
    "say",
    "say_in_thread",
    "open_thread",
    "close_thread",
    "redo",
    "undo",
    "select_version",
}

_REQUIRED_ARGS = {
    "say": ("text",),
    "say_in_thread": ("thread", "text"),
    "open_thread": ("anchor",),
    "close_thread": ("thread",),
    "redo": ("message",),
    "undo": (),
    "select_version": ("message", "index"),
}


@dataclass(frozen=True)
class Transcript:
    dataset: str
    steps: tuple[dict, ...]
    llm_script: tuple[dict, ...]

    @property
    def dataset_filename(self) -> str:
        return posixpath.basename(self.dataset.replace("\\", "/")) or "dataset.csv"


def load_transcript(obj) -> Transcript:
    """Validate a parsed transcript document (or JSON text / path)."""
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise BadTranscript("transcript must be a JSON object")
    if obj.get("version") != TRANSCRIPT_VERSION:
        raise BadTranscript(f"unsupported transcript version: {obj.get('version')!r}")
    dataset = obj.get("dataset")
    if not isinstance(dataset, str) or not dataset:
        raise BadTranscript("transcript requires a non-empty dataset path")
    steps = obj.get("steps", [])
    if not isinstance(steps, list):
        raise BadTranscript("steps must be a list")
    for i, step in enumerate(steps):
        if not isinstance(step, dict):
            raise BadTranscript(f"step {i} is not an object")
        action = step.get("action")
        if action not in STEP_ACTIONS:
            raise BadTranscript(f"step {i}: unknown action {action!r}")
        for key in _REQUIRED_ARGS[action]:
            if key not in step:
                raise BadTranscript(f"step {i} ({action}): missing {key!r}")
    script = obj.get("llm_script", [])
    if isinstance(script, dict):
        script = script.get("entries", [])
    if not isinstance(script, list):
        raise BadTranscript("llm_script must be a list of entries")
    return Transcript(dataset=dataset, steps=tuple(steps), llm_script=tuple(script))


@dataclass
class ReplayResult:
    session_id: str
    export: dict
    rows: list[dict]
    execution_ms: int

    @property
    def export_bytes(self) -> bytes:
        return canonical_bytes(self.export)


def _session_id(transcript: Transcript, csv_bytes: bytes) -> str:
    payload = json.dumps(
        {"dataset": transcript.dataset, "steps": transcript.steps, "llm_script": transcript.llm_script},
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    return "replay-" + hashlib.sha256(payload + b"\x00" + csv_bytes).hexdigest()[:12]


def _describe(view: dict) -> str:
    action = view.get("action", "")
    if action in ("appended", "selected"):
        exchange = view["exchange"]
        kind = exchange["versions"][exchange["active_index"]]["kind"]
        return f"{action} {view['target']}:{view['index']} {kind} v{exchange['active_index']}"
    if action == "undone":
        return f"undone {view['target']}"
    return action or str(view)


def replay(
    transcript: Transcript,
    csv_bytes: bytes,
    workdir: Path,
    limits: ExecutionLimits | None = None,
    runner_cmd: list[str] | None = None,
    mpl_cache_dir: Path | None = None,
) -> ReplayResult:
    """Drive the full pipeline over a scripted transcript.

    Output is a pure function of (transcript, dataset bytes): session id and
    timestamps are derived, and every LLM reply comes from the mock script.
    """
    session_id = _session_id(transcript, csv_bytes)
    config = EngineConfig(workdir=Path(workdir), runner_cmd=runner_cmd, mpl_cache_dir=mpl_cache_dir)
    if limits is not None:
        config.limits = limits
    client = LlmClient(MockBackend(MockScript.from_obj(list(transcript.llm_script))))
    store = SessionStore(Path(workdir))
    engine = SessionEngine.create(
        session_id,
        transcript.dataset_filename,
        csv_bytes,
        client,
        config,
        store=store,
        created_at=REPLAY_EPOCH,
    )
    rows: list[dict] = [
        {
            "step": 0,
            "action": "create_session",
            "detail": transcript.dataset_filename,
            "result": "degraded" if engine.llm_degraded else "ok",
            "execution_ms": 0,
        }
    ]
    for number, step in enumerate(transcript.steps, start=1):
        action = step["action"]
        before_ms = engine.execution_ms
        try:
            if action == "say":
                view = engine.say(MAIN, step["text"])
                detail = step["text"]
            elif action == "say_in_thread":
                view = engine.say(step["thread"], step["text"])
                detail = f"{step['thread']}: {step['text']}"
            elif action == "open_thread":
                thread_id = engine.open_thread(MessageRef.parse(step["anchor"]))
                view = {"action": "opened", "thread_id": thread_id}
                detail = step["anchor"]
            elif action == "close_thread":
                closed = engine.close_thread(step["thread"])
                promoted = "promoted" if closed["promoted"] is not None else "no visualization"
                view = {"action": f"closed: {promoted}"}
                detail = step["thread"]
            elif action == "redo":
                view = engine.redo(MessageRef.parse(step["message"]))
                detail = step["message"]
            elif action == "undo":
                view = engine.undo(step.get("target", MAIN))
                detail = step.get("target", MAIN)
            else:  # select_version; load_transcript rejects anything else
                view = engine.select_version(MessageRef.parse(step["message"]), step["index"])
                detail = f"{step['message']} -> v{step['index']}"
        except ScriptExhausted:
            raise
        except ThreadvizError as exc:
            raise InvalidStep(f"step {number} ({action}): {exc}") from exc
        rows.append(
            {
                "step": number,
                "action": action,
                "detail": detail,
                "result": _describe(view),
                "execution_ms": engine.execution_ms - before_ms,
            }
        )
    return ReplayResult(
        session_id=session_id,
        export=engine.export(),
        rows=rows,
        execution_ms=engine.execution_ms,
    )


# -- utterance classification ------------------------------------------------


@lru_cache(maxsize=None)
def _lexicon(name: str) -> frozenset[str]:
    text = resources.files("threadviz.data").joinpath(name).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


def interrogative_leads() -> frozenset[str]:
    return _lexicon("interrogative_leads.txt")


def imperative_verbs() -> frozenset[str]:
    return _lexicon("imperative_verbs.txt")


_FIRST_TOKEN = re.compile(r"[A-Za-z']+")


def classify_utterance(
    text: str,
    leads: frozenset[str] | None = None,
    verbs: frozenset[str] | None = None,
) -> str:
    """Heuristic speech-act class; lexicons are data files, not code."""
    stripped = text.strip()
    if stripped.endswith("?"):
        return INTERROGATIVE
    match = _FIRST_TOKEN.search(stripped)
    first = match.group(0).lower() if match else ""
    if first in (leads if leads is not None else interrogative_leads()):
        return INTERROGATIVE
    if first in (verbs if verbs is not None else imperative_verbs()):
        return IMPERATIVE
    return DECLARATIVE


UNCLASSIFIED_REFERENCE = "unclassified-reference"


def attribute_references(text: str, columns: list[str]) -> list[str]:
    """Explicitly named columns only; anything subtler is out of scope."""
    lowered = text.lower()
    return [name for name in columns if name and name.lower() in lowered]


# -- conversation tree --------------------------------------------------------


@dataclass
class TreeNode:
    id: str
    text: str
    pane: str
    chunk: int
    parent: str | None
    classification: str
    references: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "pane": self.pane,
            "chunk": self.chunk,
            "parent": self.parent,
            "classification": self.classification,
            "references": list(self.references),
        }


@dataclass
class ConversationTree:
    nodes: list[TreeNode] = field(default_factory=list)
    chunk_count: int = 0
    marker_count: int = 0
    thread_count: int = 0

    @property
    def branch_count(self) -> int:
        return self.chunk_count

    def edges(self) -> list[tuple[str, str]]:
        return [(n.parent, n.id) for n in self.nodes if n.parent is not None]

    def to_dict(self) -> dict:
        return {
            "version": TRANSCRIPT_VERSION,
            "chunk_count": self.chunk_count,
            "marker_count": self.marker_count,
            "thread_count": self.thread_count,
            "nodes": [n.to_dict() for n in self.nodes],
        }


def tree_from_dict(data: dict) -> ConversationTree:
    nodes = [
        TreeNode(
            id=n["id"],
            text=n["text"],
            pane=n["pane"],
            chunk=n["chunk"],
            parent=n["parent"],
            classification=n["classification"],
            references=list(n.get("references", [])),
        )
        for n in data.get("nodes", [])
    ]
    return ConversationTree(
        nodes=nodes,
        chunk_count=data.get("chunk_count", 0),
        marker_count=data.get("marker_count", 0),
        thread_count=data.get("thread_count", 0),
    )


def _classify_node(text: str, columns: list[str]) -> tuple[str, list[str]]:
    refs = attribute_references(text, columns)
    return classify_utterance(text), refs if refs else [UNCLASSIFIED_REFERENCE]


def build_tree(export: dict) -> ConversationTree:
    """Branching view of a session export: threads branch at their anchors,
    marker utterances start new root chunks."""
    columns = [c["name"] for c in export.get("dictionary", {}).get("columns", [])]
    threads = export.get("threads", {})
    tree = ConversationTree()
    next_chunk = 0
    chunk = None
    previous: str | None = None
    main_node_ids: list[str] = []

    def add(text: str, pane: str, chunk_id: int, parent: str | None) -> str:
        classification, refs = _classify_node(text, columns)
        node = TreeNode(
            id=f"n{len(tree.nodes)}",
            text=text,
            pane=pane,
            chunk=chunk_id,
            parent=parent,
            classification=classification,
            references=refs,
        )
        tree.nodes.append(node)
        return node.id

    for index, exchange in enumerate(export.get("main_exchanges", [])):
        text = exchange["user_text"]
        is_marker = text.strip().lower() in MARKER_UTTERANCES
        if chunk is None or is_marker:
            chunk = next_chunk
            next_chunk += 1
        if is_marker:
            tree.marker_count += 1
            previous = None
        node_id = add(text, MAIN, chunk, previous)
        previous = node_id
        main_node_ids.append(node_id)
        thread_id = exchange.get("thread")
        if thread_id is not None and thread_id in threads:
            tree.thread_count += 1
            thread_chunk = next_chunk
            next_chunk += 1
            thread_parent = node_id
            for thread_exchange in threads[thread_id]["exchanges"]:
                thread_parent = add(
                    thread_exchange["user_text"], thread_id, thread_chunk, thread_parent
                )
    tree.chunk_count = next_chunk
    return tree


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def export_tree(tree: ConversationTree, format: str = "dot") -> bytes:
    if format == "json":
        return (json.dumps(tree.to_dict(), indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if format != "dot":
        raise ValueError(f"unknown tree format: {format!r}")
    lines = ["digraph conversation {"]
    if tree.nodes:
        lines.append("  rankdir=TB;")
        for chunk in range(tree.chunk_count):
            members = [n for n in tree.nodes if n.chunk == chunk]
            if not members:
                continue
            lines.append(f"  subgraph cluster_{chunk} {{")
            lines.append(f'    label="chunk {chunk}";')
            for node in members:
                shape = "box" if node.pane == MAIN else "ellipse"
                lines.append(
                    f'    {node.id} [label="{_dot_escape(node.text)}" shape={shape}];'
                )
            lines.append("  }")
        for parent, child in tree.edges():
            lines.append(f"  {parent} -> {child};")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


# -- report -------------------------------------------------------------------

STEPS_CSV_COLUMNS = ["step", "action", "detail", "result", "execution_ms"]


def render_steps_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=STEPS_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def _tree_figure(tree: ConversationTree, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    positions: dict[str, tuple[float, float]] = {}
    depth: dict[str, int] = {}
    for node in tree.nodes:
        depth[node.id] = 0 if node.parent is None else depth[node.parent] + 1
        positions[node.id] = (depth[node.id], -node.chunk)
    width = max((d for d in depth.values()), default=1) + 2
    height = max(tree.chunk_count, 1) + 1
    fig, ax = plt.subplots(figsize=(max(6, width * 1.6), max(3, height * 1.2)))
    for parent, child in tree.edges():
        x0, y0 = positions[parent]
        x1, y1 = positions[child]
        ax.plot([x0, x1], [y0, y1], color="#888888", zorder=1)
    for node in tree.nodes:
        x, y = positions[node.id]
        color = "#4c72b0" if node.pane == MAIN else "#dd8452"
        ax.scatter([x], [y], s=160, color=color, zorder=2)
        label = node.text if len(node.text) <= 24 else node.text[:21] + "..."
        ax.annotate(
            label,
            (x, y),
            textcoords="offset points",
            xytext=(0, 10),
            ha="center",
            fontsize=8,
        )
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100)
    plt.close(fig)


def write_report(result: ReplayResult, out_dir: Path) -> list[Path]:
    """steps.csv plus rendered figures and the conversation tree, side by side."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    steps_path = out_dir / "steps.csv"
    steps_path.write_text(render_steps_csv(result.rows), encoding="utf-8")
    written.append(steps_path)

    figures = out_dir / "figures"
    figures.mkdir(exist_ok=True)
    import base64

    def dump_versions(target: str, index: int, versions: list[dict]) -> None:
        for v_index, version in enumerate(versions):
            if version.get("image"):
                path = figures / f"{target}-{index}-v{v_index}.png"
                path.write_bytes(base64.b64decode(version["image"]))
                written.append(path)

    for index, exchange in enumerate(result.export.get("main_exchanges", [])):
        dump_versions(MAIN, index, exchange["versions"])
    for thread_id, thread in result.export.get("threads", {}).items():
        for index, exchange in enumerate(thread["exchanges"]):
            dump_versions(thread_id, index, exchange["versions"])

    tree = build_tree(result.export)
    dot_path = out_dir / "tree.dot"
    dot_path.write_bytes(export_tree(tree, "dot"))
    written.append(dot_path)
    png_path = out_dir / "tree.png"
    _tree_figure(tree, png_path)
    written.append(png_path)
    return written
