"""Threaded conversational visual analytics over tabular data."""

from .conversation import (
    KIND_TEXT,
    KIND_VISUALIZATION,
    MAIN,
    AssistantMessage,
    Exchange,
    MessageRef,
    ResponseVersion,
    Session,
    Thread,
)
from .dictionary import DataDictionary, infer_schema, parse_markdown, render_markdown
from .engine import EngineConfig, SessionEngine
from .extraction import classify_reply, clean_program, extract_blocks, select_program
from .gateway import LlmClient, MockBackend, MockScript
from .replay import ReplayResult, Transcript, build_tree, classify_utterance, load_transcript, replay

__version__ = "0.1.0"

__all__ = [
    "AssistantMessage",
    "DataDictionary",
    "EngineConfig",
    "Exchange",
    "KIND_TEXT",
    "KIND_VISUALIZATION",
    "LlmClient",
    "MAIN",
    "MessageRef",
    "MockBackend",
    "MockScript",
    "ReplayResult",
    "ResponseVersion",
    "Session",
    "SessionEngine",
    "Thread",
    "Transcript",
    "build_tree",
    "classify_reply",
    "classify_utterance",
    "clean_program",
    "extract_blocks",
    "infer_schema",
    "load_transcript",
    "parse_markdown",
    "render_markdown",
    "replay",
    "select_program",
    "__version__",
]
