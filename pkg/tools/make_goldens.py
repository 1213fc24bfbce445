#!/usr/bin/env python3
"""Compose the golden message arrays for the scripted scenario by hand.

This script deliberately does NOT import the package under test. It builds the
expected LLM message arrays from the checked-in template fixtures plus the
literal scenario constants, applying the documented assembly rules itself:

  call 0  dictionary prompt (system + user with the preliminary table)
  call 1  main chat: system, two few-shot pairs, new utterance
  call 2  main chat: + history pair for exchange 0 (its program)
  call 3  main chat: + history pair for exchange 1 (its prose reply)
  call 4  thread: thread system (original code), new refinement
  call 5  thread: + history pair for refinement 1
  call 6  main chat redo of utterance 2 at position 1: history holds only
          exchange 0, whose active program is the version promoted by the
          thread close — the sorted horizontal bar program.

Run from the repository root: python3 tools/make_goldens.py
"""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import golden_scenario as sc

TEMPLATES = ROOT / "tests" / "fixtures" / "templates"
OUT = ROOT / "tests" / "fixtures" / "goldens"


def template(name: str) -> str:
    text = (TEMPLATES / name).read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def main() -> None:
    main_system = (
        template("main_chat_system.txt")
        .replace("[FILENAME]", sc.FILENAME)
        .replace("[DATASET DICTIONARY]", sc.RENDERED_DICTIONARY)
    )
    thread_system = (
        template("thread_system.txt")
        .replace("[ORIGINAL CODE]", sc.PROG_BAR)
        .replace("[FILENAME]", sc.FILENAME)
        .replace("[DATASET DICTIONARY]", sc.RENDERED_DICTIONARY)
    )
    dictionary_user = (
        template("dictionary_user.txt")
        .replace("[FILENAME]", sc.FILENAME)
        .replace("[PANDAS TABLE]", sc.PRELIMINARY_TABLE)
    )
    few_shot = []
    for n in (1, 2):
        few_shot.append(("user", template(f"few_shot_{n}_user.txt")))
        few_shot.append(
            ("assistant", template(f"few_shot_{n}_assistant.txt").replace("{filename}", sc.FILENAME))
        )

    def msgs(*pairs):
        return [{"role": role, "content": content} for role, content in pairs]

    main_head = [("system", main_system), *few_shot]

    calls = [
        msgs(("system", template("dictionary_system.txt")), ("user", dictionary_user)),
        msgs(*main_head, ("user", sc.UTTERANCE_1)),
        msgs(*main_head, ("user", sc.UTTERANCE_1), ("assistant", sc.PROG_BAR), ("user", sc.UTTERANCE_2)),
        msgs(
            *main_head,
            ("user", sc.UTTERANCE_1),
            ("assistant", sc.PROG_BAR),
            ("user", sc.UTTERANCE_2),
            ("assistant", sc.REPLY_2),
            ("user", sc.UTTERANCE_3),
        ),
        msgs(("system", thread_system), ("user", sc.REFINEMENT_1)),
        msgs(
            ("system", thread_system),
            ("user", sc.REFINEMENT_1),
            ("assistant", sc.PROG_BARH),
            ("user", sc.REFINEMENT_2),
        ),
        # Redo after the thread closed: exchange 0's active program is the
        # promoted one, and no thread-internal utterance may appear.
        msgs(*main_head, ("user", sc.UTTERANCE_1), ("assistant", sc.PROG_BARH_SORTED), ("user", sc.UTTERANCE_2)),
    ]

    OUT.mkdir(parents=True, exist_ok=True)
    for i, call in enumerate(calls):
        path = OUT / f"call{i}.json"
        path.write_bytes((json.dumps(call, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))
        print(f"wrote {path.relative_to(ROOT)} ({len(call)} messages)")


if __name__ == "__main__":
    main()
