"""Exception taxonomy shared across the engine modules."""
from __future__ import annotations


class ThreadvizError(Exception):
    """Base class for all engine errors."""

    code = "error"


# conversation state machine


class ConversationError(ThreadvizError):
    code = "conversation_error"


class UnknownThread(ConversationError):
    code = "unknown_thread"


class EmptyUtterance(ConversationError):
    code = "empty_utterance"


class NotAnAssistantMessage(ConversationError):
    code = "not_an_assistant_message"


class IndexOutOfRange(ConversationError):
    code = "index_out_of_range"


class NothingToUndo(ConversationError):
    code = "nothing_to_undo"


class NoProgramToRefine(ConversationError):
    code = "no_program_to_refine"


class AlreadyClosed(ConversationError):
    code = "already_closed"


# dataset dictionary


class DictionaryError(ThreadvizError):
    code = "dictionary_error"


class EmptyFile(DictionaryError):
    code = "empty_file"


class NoHeader(DictionaryError):
    code = "no_header"


class UnparseableCsv(DictionaryError):
    code = "unparseable_csv"

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class UnknownColumn(DictionaryError):
    code = "unknown_column"


class NoTableFound(DictionaryError):
    code = "no_table_found"


# llm gateway


class GatewayError(ThreadvizError):
    code = "gateway_error"


class CompletionTimeout(GatewayError):
    code = "timeout"


class TransportError(GatewayError):
    code = "transport_error"

    def __init__(self, status: int | None, body: str):
        super().__init__(f"status={status}: {body[:200]}")
        self.status = status
        self.body = body


class MalformedResponse(GatewayError):
    code = "malformed_response"


class ScriptExhausted(GatewayError):
    code = "script_exhausted"


# code extraction


class BlankProgram(ThreadvizError):
    code = "blank_program"


# execution


class SandboxUnavailable(ThreadvizError):
    code = "sandbox_unavailable"


# replay

class InvalidStep(ThreadvizError):
    code = "invalid_step"


class BadTranscript(ThreadvizError):
    code = "bad_transcript"
