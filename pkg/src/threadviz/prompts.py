"""Prompt construction: verbatim instruction templates, few-shot context, token budgets."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .conversation import KIND_VISUALIZATION, Exchange, Session, Thread
from .dictionary import DataDictionary, render_markdown

PURPOSE_MAIN_CHAT = "main_chat"
PURPOSE_THREAD = "thread"
PURPOSE_DICTIONARY = "dictionary"

DEFAULT_BUDGET_TOKENS = 12_000
CHARS_PER_TOKEN = 4


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class PromptBundle:
    purpose: str
    messages: tuple[ChatMessage, ...]


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Read a template data file; the trailing newline is file formatting, not content."""
    text = resources.files("threadviz.templates").joinpath(name).read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


_PLACEHOLDER = re.compile(r"\[(FILENAME|DATASET DICTIONARY|ORIGINAL CODE|PANDAS TABLE)\]")


def _fill(template: str, mapping: dict[str, str]) -> str:
    # Single pass so substituted values can never introduce further placeholders.
    return _PLACEHOLDER.sub(lambda m: mapping[m.group(1)], template)


def main_chat_system_prompt(filename: str, dictionary_markdown: str) -> str:
    return _fill(
        load_template("main_chat_system.txt"),
        {"FILENAME": filename, "DATASET DICTIONARY": dictionary_markdown},
    )


def thread_system_prompt(original_code: str, filename: str, dictionary_markdown: str) -> str:
    return _fill(
        load_template("thread_system.txt"),
        {
            "ORIGINAL CODE": original_code,
            "FILENAME": filename,
            "DATASET DICTIONARY": dictionary_markdown,
        },
    )


def few_shot_examples(filename: str) -> list[tuple[ChatMessage, ChatMessage]]:
    """The two fixed demonstration exchanges, with {filename} substituted."""
    pairs = []
    for n in (1, 2):
        user = load_template(f"few_shot_{n}_user.txt")
        assistant = load_template(f"few_shot_{n}_assistant.txt").replace("{filename}", filename)
        pairs.append((ChatMessage("user", user), ChatMessage("assistant", assistant)))
    return pairs


def dictionary_bundle(filename: str, preliminary_table_markdown: str) -> PromptBundle:
    system = load_template("dictionary_system.txt")
    user = _fill(
        load_template("dictionary_user.txt"),
        {"FILENAME": filename, "PANDAS TABLE": preliminary_table_markdown},
    )
    return PromptBundle(
        purpose=PURPOSE_DICTIONARY,
        messages=(ChatMessage("system", system), ChatMessage("user", user)),
    )


def estimate_tokens(messages: list[ChatMessage] | tuple[ChatMessage, ...]) -> int:
    return sum(len(m.content) for m in messages) // CHARS_PER_TOKEN


def _history_pair(exchange: Exchange) -> tuple[ChatMessage, ChatMessage]:
    active = exchange.assistant.active
    if active.kind == KIND_VISUALIZATION:
        content = active.program or ""
    else:
        content = active.raw_llm_text
    return (ChatMessage("user", exchange.user_text), ChatMessage("assistant", content))


def _dictionary_markdown(dictionary: DataDictionary | None, filename: str) -> str:
    if dictionary is None:
        dictionary = DataDictionary(filename=filename, columns=[], row_count=0)
    return render_markdown(dictionary, include_descriptions=True)


def _fit_budget(
    head: list[ChatMessage],
    pairs: list[tuple[ChatMessage, ChatMessage]],
    tail: list[ChatMessage],
    budget_tokens: int,
) -> tuple[ChatMessage, ...]:
    pairs = list(pairs)
    def total() -> int:
        flat = head + [m for pair in pairs for m in pair] + tail
        return estimate_tokens(flat)
    # Oldest exchanges go first; instructions, few-shot, and the new utterance never do.
    while pairs and total() > budget_tokens:
        pairs.pop(0)
    return tuple(head + [m for pair in pairs for m in pair] + tail)


def build_main_chat_bundle(
    session: Session,
    dictionary: DataDictionary | None,
    new_utterance: str,
    history: list[Exchange] | None = None,
    budget_tokens: int = DEFAULT_BUDGET_TOKENS,
) -> PromptBundle:
    """Assemble the main-chat message array; thread-internal exchanges never appear."""
    markdown = _dictionary_markdown(dictionary, session.dataset_filename)
    system = ChatMessage("system", main_chat_system_prompt(session.dataset_filename, markdown))
    head = [system]
    for user, assistant in few_shot_examples(session.dataset_filename):
        head.extend((user, assistant))
    exchanges = session.main_exchanges if history is None else history
    pairs = [_history_pair(ex) for ex in exchanges]
    tail = [ChatMessage("user", new_utterance)]
    return PromptBundle(PURPOSE_MAIN_CHAT, _fit_budget(head, pairs, tail, budget_tokens))


def build_thread_bundle(
    thread: Thread,
    dictionary: DataDictionary | None,
    new_utterance: str,
    filename: str,
    history: list[Exchange] | None = None,
    budget_tokens: int = DEFAULT_BUDGET_TOKENS,
) -> PromptBundle:
    """Assemble a thread message array: no few-shot, the original code is the exemplar."""
    markdown = _dictionary_markdown(dictionary, filename)
    system = ChatMessage("system", thread_system_prompt(thread.original_code, filename, markdown))
    exchanges = thread.exchanges if history is None else history
    pairs = [_history_pair(ex) for ex in exchanges]
    tail = [ChatMessage("user", new_utterance)]
    return PromptBundle(PURPOSE_THREAD, _fit_budget([system], pairs, tail, budget_tokens))
