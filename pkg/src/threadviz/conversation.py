"""Session state machine: exchanges, response versions, and refinement threads."""
from __future__ import annotations

import base64
import copy
from dataclasses import dataclass, field

from .dictionary import DataDictionary
from .errors import (
    AlreadyClosed,
    EmptyUtterance,
    IndexOutOfRange,
    NoProgramToRefine,
    NotAnAssistantMessage,
    NothingToUndo,
    UnknownThread,
)

MAIN = "main"

KIND_TEXT = "text"
KIND_VISUALIZATION = "visualization"


@dataclass(frozen=True)
class MessageRef:
    """Addresses one assistant message: a pane ("main" or a thread id) plus exchange index."""

    target: str
    index: int

    def __str__(self) -> str:
        return f"{self.target}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> MessageRef:
        target, sep, idx = text.rpartition(":")
        if not sep or not target:
            raise ValueError(f"bad message ref {text!r}")
        return cls(target=target, index=int(idx))


@dataclass
class ResponseVersion:
    """One assistant answer; visualization versions carry the executed program and image."""

    kind: str
    raw_llm_text: str
    program: str | None = None
    image: bytes | None = None
    caption: str | None = None
    outcome: str | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        if self.kind == KIND_VISUALIZATION and (not self.program or self.image is None):
            raise ValueError("visualization versions require program and image")
        if self.kind == KIND_TEXT and self.image is not None:
            raise ValueError("text versions carry no image")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "raw_llm_text": self.raw_llm_text,
            "program": self.program,
            "image": base64.b64encode(self.image).decode("ascii") if self.image is not None else None,
            "caption": self.caption,
            "outcome": self.outcome,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ResponseVersion:
        image = data.get("image")
        return cls(
            kind=data["kind"],
            raw_llm_text=data["raw_llm_text"],
            program=data.get("program"),
            image=base64.b64decode(image) if image is not None else None,
            caption=data.get("caption"),
            outcome=data.get("outcome"),
            note=data.get("note"),
        )


@dataclass
class AssistantMessage:
    """Version list for one assistant slot; versions are append-only."""

    versions: list[ResponseVersion]
    active_index: int = 0

    @property
    def active(self) -> ResponseVersion:
        return self.versions[self.active_index]

    def add_version(self, version: ResponseVersion) -> int:
        self.versions.append(version)
        self.active_index = len(self.versions) - 1
        return self.active_index

    def select_version(self, index: int) -> ResponseVersion:
        if not 0 <= index < len(self.versions):
            raise IndexOutOfRange(f"version {index} of {len(self.versions)}")
        self.active_index = index
        return self.active


@dataclass
class Exchange:
    """One user utterance paired with its assistant message."""

    user_text: str
    assistant: AssistantMessage
    thread_id: str | None = None

    def to_dict(self) -> dict:
        data = {
            "user_text": self.user_text,
            "versions": [v.to_dict() for v in self.assistant.versions],
            "active_index": self.assistant.active_index,
        }
        if self.thread_id is not None:
            data["thread"] = self.thread_id
        return data

    @classmethod
    def from_dict(cls, data: dict) -> Exchange:
        return cls(
            user_text=data["user_text"],
            assistant=AssistantMessage(
                versions=[ResponseVersion.from_dict(v) for v in data["versions"]],
                active_index=data["active_index"],
            ),
            thread_id=data.get("thread"),
        )


@dataclass
class Thread:
    """Refinement branch anchored to one main-chat assistant message."""

    id: str
    anchor: MessageRef
    original_code: str  # snapshot at creation time, never rewritten
    exchanges: list[Exchange] = field(default_factory=list)
    open: bool = True

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "anchor": {"target": self.anchor.target, "index": self.anchor.index},
            "original_code": self.original_code,
            "open": self.open,
            "exchanges": [ex.to_dict() for ex in self.exchanges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Thread:
        return cls(
            id=data["id"],
            anchor=MessageRef(data["anchor"]["target"], data["anchor"]["index"]),
            original_code=data["original_code"],
            exchanges=[Exchange.from_dict(ex) for ex in data["exchanges"]],
            open=data["open"],
        )


@dataclass
class Session:
    """A full analytic conversation bound to one dataset."""

    id: str
    dataset_filename: str
    dictionary: DataDictionary | None = None
    main_exchanges: list[Exchange] = field(default_factory=list)
    threads: dict[str, Thread] = field(default_factory=dict)
    thread_seq: int = 0

    def history(self, target: str) -> list[Exchange]:
        if target == MAIN:
            return self.main_exchanges
        thread = self.threads.get(target)
        if thread is None:
            raise UnknownThread(target)
        return thread.exchanges

    def append_exchange(self, target: str, user_text: str, response: ResponseVersion) -> int:
        if not user_text.strip():
            raise EmptyUtterance("utterance is empty after trimming")
        history = self.history(target)
        history.append(Exchange(user_text=user_text, assistant=AssistantMessage(versions=[response])))
        return len(history) - 1

    def resolve_assistant(self, ref: MessageRef) -> AssistantMessage:
        history = self.history(ref.target)
        if not 0 <= ref.index < len(history):
            raise NotAnAssistantMessage(str(ref))
        return history[ref.index].assistant

    def add_version(self, ref: MessageRef, response: ResponseVersion) -> int:
        return self.resolve_assistant(ref).add_version(response)

    def select_version(self, ref: MessageRef, index: int) -> ResponseVersion:
        return self.resolve_assistant(ref).select_version(index)

    def undo(self, target: str) -> Exchange:
        history = self.history(target)
        if not history:
            raise NothingToUndo(target)
        removed = history.pop()
        # A thread anchored at the removed exchange has no surviving anchor.
        if removed.thread_id is not None:
            self.threads.pop(removed.thread_id, None)
        return removed

    def open_thread(self, ref: MessageRef) -> str:
        if ref.target != MAIN:
            raise NotAnAssistantMessage(f"threads anchor to main-chat messages, not {ref.target}")
        if not 0 <= ref.index < len(self.main_exchanges):
            raise NotAnAssistantMessage(str(ref))
        exchange = self.main_exchanges[ref.index]
        active = exchange.assistant.active
        if not active.program:
            raise NoProgramToRefine(str(ref))
        if exchange.thread_id is not None:
            thread = self.threads[exchange.thread_id]
            thread.open = True
            return thread.id
        self.thread_seq += 1
        thread = Thread(id=f"t{self.thread_seq}", anchor=ref, original_code=active.program)
        self.threads[thread.id] = thread
        exchange.thread_id = thread.id
        return thread.id

    def close_thread(self, thread_id: str) -> ResponseVersion | None:
        thread = self.threads.get(thread_id)
        if thread is None:
            raise UnknownThread(thread_id)
        if not thread.open:
            raise AlreadyClosed(thread_id)
        thread.open = False
        promoted = None
        for exchange in thread.exchanges:
            if exchange.assistant.active.kind == KIND_VISUALIZATION:
                promoted = exchange.assistant.active
        if promoted is None:
            return None
        promoted = copy.deepcopy(promoted)
        self.add_version(thread.anchor, promoted)
        return promoted

    def export(self) -> dict:
        return {
            "session_id": self.id,
            "dataset_filename": self.dataset_filename,
            "dictionary": self.dictionary.to_dict() if self.dictionary is not None else None,
            "main_exchanges": [ex.to_dict() for ex in self.main_exchanges],
            "threads": {tid: thread.to_dict() for tid, thread in self.threads.items()},
        }

    @classmethod
    def from_export(cls, data: dict) -> Session:
        session = cls(
            id=data["session_id"],
            dataset_filename=data["dataset_filename"],
            dictionary=DataDictionary.from_dict(data["dictionary"]) if data.get("dictionary") else None,
            main_exchanges=[Exchange.from_dict(ex) for ex in data["main_exchanges"]],
            threads={tid: Thread.from_dict(t) for tid, t in data["threads"].items()},
        )
        seqs = [int(tid[1:]) for tid in session.threads if tid[1:].isdigit()]
        session.thread_seq = max(seqs, default=0)
        return session
