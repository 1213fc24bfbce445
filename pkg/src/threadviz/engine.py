"""Conversation engine: the assemble → complete → classify → execute → store pipeline."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .conversation import KIND_TEXT, KIND_VISUALIZATION, MAIN, MessageRef, ResponseVersion, Session
from .dictionary import edit_description, generate_descriptions, infer_schema
from .errors import (
    BlankProgram,
    CompletionTimeout,
    EmptyUtterance,
    MalformedResponse,
    ScriptExhausted,
    TransportError,
)
from .executor import ExecutionLimits, Workspace, execute, outcome_to_response
from .extraction import REPLY_CODE, classify_reply, clean_program
from .gateway import LlmClient
from .prompts import (
    PURPOSE_MAIN_CHAT,
    PURPOSE_THREAD,
    DEFAULT_BUDGET_TOKENS,
    build_main_chat_bundle,
    build_thread_bundle,
)
from .store import SessionStore

log = logging.getLogger(__name__)

LUCKY_UTTERANCE = "show me something interesting"

# Utterances handled by the engine instead of the LLM, compared trimmed and lowercased.
INTERCEPTED_UTTERANCES = {"undo"}


@dataclass
class EngineConfig:
    workdir: Path
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    budget_tokens: int = DEFAULT_BUDGET_TOKENS
    runner_cmd: list[str] | None = None
    mpl_cache_dir: Path | None = None  # shared font-cache location; default is per-workdir

    @property
    def mpl_cache(self) -> Path:
        if self.mpl_cache_dir is not None:
            return Path(self.mpl_cache_dir)
        return Path(self.workdir) / ".mplcache"


class SessionEngine:
    """Drives one session; the HTTP service and the replay harness both sit on top."""

    def __init__(
        self,
        session: Session,
        workspace: Workspace,
        client: LlmClient,
        config: EngineConfig,
        store: SessionStore | None = None,
        created_at: str = "",
    ):
        self.session = session
        self.workspace = workspace
        self.client = client
        self.config = config
        self.store = store
        self.created_at = created_at
        self.readonly = False
        self.execution_ms = 0
        self.llm_degraded = False

    # -- construction --------------------------------------------------

    @classmethod
    def create(
        cls,
        session_id: str,
        dataset_filename: str,
        csv_bytes: bytes,
        client: LlmClient,
        config: EngineConfig,
        store: SessionStore | None = None,
        created_at: str = "",
    ) -> "SessionEngine":
        dictionary = infer_schema(csv_bytes, dataset_filename)
        store = store or SessionStore(config.workdir)
        root = store.session_root(session_id)
        workspace = Workspace.create(root, dataset_filename, csv_bytes, mpl_cache=config.mpl_cache)
        session = Session(id=session_id, dataset_filename=dataset_filename)
        engine = cls(session, workspace, client, config, store=store, created_at=created_at)
        try:
            dictionary = generate_descriptions(dictionary, client)
        except (TransportError, CompletionTimeout, MalformedResponse, ScriptExhausted) as exc:
            log.warning("description generation failed: %s", exc)
            dictionary.warnings.append("description generation failed: LLM unreachable")
            engine.llm_degraded = True
        session.dictionary = dictionary
        engine.persist()
        return engine

    @classmethod
    def load(
        cls,
        session_id: str,
        client: LlmClient,
        config: EngineConfig,
        store: SessionStore | None = None,
    ) -> "SessionEngine":
        store = store or SessionStore(config.workdir)
        record = store.load(session_id)
        session = Session.from_export(record["session"])
        workspace = Workspace(
            store.session_root(session_id),
            session.dataset_filename,
            mpl_cache=config.mpl_cache,
        )
        engine = cls(session, workspace, client, config, store=store, created_at=record.get("created_at", ""))
        engine.client.trace.extend(record.get("trace", []))
        return engine

    # -- persistence ---------------------------------------------------

    def record(self) -> dict:
        return {
            "session": self.session.export(),
            "created_at": self.created_at,
            "workspace": str(self.workspace.root),
            "trace": list(self.client.trace),
        }

    def persist(self) -> None:
        if self.store is None or self.readonly:
            return
        self.store.save(self.session.id, self.record())

    def export(self) -> dict:
        return self.session.export()

    # -- pipeline ------------------------------------------------------

    def _realize(self, reply: str) -> tuple[ResponseVersion, dict | None]:
        classified = classify_reply(reply)
        if classified.kind != REPLY_CODE:
            return ResponseVersion(kind=KIND_TEXT, raw_llm_text=reply), None
        try:
            program = clean_program(classified.program.source)
        except BlankProgram:
            return ResponseVersion(kind=KIND_TEXT, raw_llm_text=reply), None
        outcome = execute(program, self.workspace, self.config.limits, self.config.runner_cmd)
        self.execution_ms += outcome.duration_ms
        return outcome_to_response(outcome, reply, program)

    def _bundle_for(self, target: str, utterance: str, upto: int | None = None):
        if target == MAIN:
            history = self.session.main_exchanges if upto is None else self.session.main_exchanges[:upto]
            return build_main_chat_bundle(
                self.session,
                self.session.dictionary,
                utterance,
                history=history,
                budget_tokens=self.config.budget_tokens,
            )
        thread = self.session.threads.get(target)
        if thread is None:
            # Raise the canonical error through the shared resolution path.
            self.session.history(target)
        history = thread.exchanges if upto is None else thread.exchanges[:upto]
        return build_thread_bundle(
            thread,
            self.session.dictionary,
            utterance,
            self.session.dataset_filename,
            history=history,
            budget_tokens=self.config.budget_tokens,
        )

    def _store_image(self, target: str, index: int, version_index: int, version: ResponseVersion) -> None:
        if version.image is None or self.readonly:
            return
        name = f"{target}-{index}-v{version_index}.png"
        self.workspace.images_dir.mkdir(exist_ok=True)
        (self.workspace.images_dir / name).write_bytes(version.image)

    def say(self, target: str, text: str) -> dict:
        """Full pipeline for one utterance; literal "undo" is intercepted."""
        if not text.strip():
            # reject before any LLM call is spent
            raise EmptyUtterance("utterance is empty after trimming")
        if text.strip().lower() in INTERCEPTED_UTTERANCES:
            return self.undo(target)
        purpose = PURPOSE_MAIN_CHAT if target == MAIN else PURPOSE_THREAD
        bundle = self._bundle_for(target, text)
        reply = self.client.complete(bundle.messages, purpose=purpose)
        version, cue = self._realize(reply)
        index = self.session.append_exchange(target, text, version)
        self._store_image(target, index, 0, version)
        self.persist()
        return self._exchange_view(target, index, cue)

    def lucky(self) -> dict:
        return self.say(MAIN, LUCKY_UTTERANCE)

    def redo(self, ref: MessageRef) -> dict:
        """Re-dispatch the same utterance at the same context position; append a sibling."""
        history = self.session.history(ref.target)
        self.session.resolve_assistant(ref)
        utterance = history[ref.index].user_text
        purpose = PURPOSE_MAIN_CHAT if ref.target == MAIN else PURPOSE_THREAD
        bundle = self._bundle_for(ref.target, utterance, upto=ref.index)
        reply = self.client.complete(bundle.messages, purpose=purpose)
        version, cue = self._realize(reply)
        version_index = self.session.add_version(ref, version)
        self._store_image(ref.target, ref.index, version_index, version)
        self.persist()
        return self._exchange_view(ref.target, ref.index, cue)

    def undo(self, target: str) -> dict:
        removed = self.session.undo(target)
        self.persist()
        return {
            "action": "undone",
            "target": target,
            "removed": {"user_text": removed.user_text},
        }

    def select_version(self, ref: MessageRef, index: int) -> dict:
        self.session.select_version(ref, index)
        self.persist()
        return self._exchange_view(ref.target, ref.index, None, action="selected")

    def open_thread(self, anchor: MessageRef) -> str:
        thread_id = self.session.open_thread(anchor)
        self.persist()
        return thread_id

    def close_thread(self, thread_id: str) -> dict:
        promoted = self.session.close_thread(thread_id)
        thread = self.session.threads[thread_id]
        if promoted is not None:
            anchor = thread.anchor
            message = self.session.resolve_assistant(anchor)
            self._store_image(anchor.target, anchor.index, message.active_index, promoted)
        self.persist()
        return {
            "thread_id": thread_id,
            "anchor": {"target": thread.anchor.target, "index": thread.anchor.index},
            "promoted": promoted.to_dict() if promoted is not None else None,
        }

    def edit_dictionary(self, column: str, text: str) -> dict:
        self.session.dictionary = edit_description(self.session.dictionary, column, text)
        self.persist()
        return self.session.dictionary.to_dict()

    # -- views -----------------------------------------------------------

    def _exchange_view(self, target: str, index: int, cue: dict | None, action: str = "appended") -> dict:
        exchange = self.session.history(target)[index]
        view = {
            "action": action,
            "target": target,
            "index": index,
            "exchange": exchange.to_dict(),
        }
        if cue is not None:
            view["cue"] = cue
        return view
