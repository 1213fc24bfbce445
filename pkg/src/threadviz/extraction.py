"""Fenced-code extraction: block parsing, program selection, cleaning, classification."""
from __future__ import annotations

import re
import textwrap
from dataclasses import dataclass

from .errors import BlankProgram

RULE_SINGLE = "single"
RULE_CONJOIN_ALL = "conjoin_all"
RULE_LAST_WITH_IMPORTS = "last_with_imports"

REPLY_CODE = "code"
REPLY_TEXT = "text"

_IMPORT_LINE = re.compile(r"^(?:import\s+\w|from\s+\S+\s+import\s)", re.MULTILINE)


@dataclass(frozen=True)
class CodeBlock:
    body: str
    language_tag: str | None
    has_imports: bool


@dataclass(frozen=True)
class ExtractedProgram:
    source: str
    selection_rule: str
    residual_prose: str = ""


@dataclass(frozen=True)
class Reply:
    kind: str  # REPLY_CODE or REPLY_TEXT
    text: str  # the full reply, byte-identical to the input
    program: ExtractedProgram | None = None


def _split(reply_text: str) -> tuple[list[CodeBlock], list[str]]:
    blocks: list[CodeBlock] = []
    prose: list[str] = []
    buf: list[str] = []
    tag: str | None = None
    in_block = False
    for line in reply_text.split("\n"):
        stripped = line.strip()
        if not in_block:
            if stripped.startswith("```"):
                in_block = True
                buf = []
                tag = stripped[3:].strip() or None
            else:
                prose.append(line)
        elif stripped == "```":
            body = "\n".join(buf)
            blocks.append(CodeBlock(body, tag, bool(_IMPORT_LINE.search(body))))
            in_block = False
        else:
            buf.append(line)
    if in_block:
        # Unterminated fence: the block runs to the end of the reply.
        body = "\n".join(buf)
        blocks.append(CodeBlock(body, tag, bool(_IMPORT_LINE.search(body))))
    return blocks, prose


def extract_blocks(reply_text: str) -> list[CodeBlock]:
    """Fenced blocks in document order; language tags captured but never used for selection."""
    return _split(reply_text)[0]


def select_program(blocks: list[CodeBlock], residual_prose: str = "") -> ExtractedProgram | None:
    if not blocks:
        return None
    if len(blocks) == 1:
        return ExtractedProgram(blocks[0].body, RULE_SINGLE, residual_prose)
    import_bearing = [b for b in blocks if b.has_imports]
    if len(import_bearing) >= 2:
        return ExtractedProgram(import_bearing[-1].body, RULE_LAST_WITH_IMPORTS, residual_prose)
    return ExtractedProgram("\n".join(b.body for b in blocks), RULE_CONJOIN_ALL, residual_prose)


def clean_program(program: str) -> str:
    """Normalize whitespace so the extracted source is runnable as written."""
    text = program.replace("\r\n", "\n").replace("\r", "\n")
    lines = [line for line in text.split("\n") if not line.strip().startswith("```")]
    text = "\n".join(lines).replace("\t", "    ")
    text = textwrap.dedent(text)
    if not text.strip():
        raise BlankProgram("program is blank after cleaning")
    return text


def classify_reply(reply_text: str) -> Reply:
    """Code iff a program was selected; Text keeps the reply untouched."""
    blocks, prose = _split(reply_text)
    program = select_program(blocks, residual_prose="\n".join(prose).strip())
    if program is None:
        return Reply(kind=REPLY_TEXT, text=reply_text)
    return Reply(kind=REPLY_CODE, text=reply_text, program=program)
