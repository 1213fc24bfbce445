import base64

import pytest

import golden_scenario as sc
from threadviz.conversation import KIND_TEXT, KIND_VISUALIZATION, MAIN, MessageRef
from threadviz.engine import INTERCEPTED_UTTERANCES, LUCKY_UTTERANCE, EngineConfig, SessionEngine
from threadviz.errors import NothingToUndo
from threadviz.executor import SYSTEM_ERROR_CUE
from threadviz.store import SessionStore

# Executes instantly and emits a valid PNG signature plus a caption line.
TINY_VIZ = (
    "import base64\n"
    "png = bytes.fromhex('89504e470d0a1a0a') + b'payload'\n"
    "print(base64.b64encode(png).decode())\n"
    "print('tiny caption')"
)


def code_reply(program: str, prefix: str = "Here you go:") -> str:
    return f"{prefix}\n```python\n{program}\n```"


def test_create_builds_described_dictionary(make_engine):
    engine = make_engine([sc.DICT_REPLY])
    dictionary = engine.session.dictionary
    assert dictionary.column("age").description == "Age in years at boarding."
    assert dictionary.warnings == []
    assert not engine.llm_degraded
    assert engine.client.trace[0]["purpose"] == "dictionary"
    assert engine.store.exists("s1")


def test_create_degrades_when_script_is_empty(make_engine):
    engine = make_engine([])
    dictionary = engine.session.dictionary
    assert [c.description for c in dictionary.columns] == ["", "", ""]
    assert any("LLM unreachable" in w for w in dictionary.warnings)
    assert engine.llm_degraded


def test_say_text_reply(make_engine):
    engine = make_engine([sc.DICT_REPLY, "The mean fare is 29.63."])
    view = engine.say(MAIN, "what is the mean fare?")
    assert view["action"] == "appended"
    assert view["target"] == MAIN
    assert view["index"] == 0
    assert "cue" not in view
    version = view["exchange"]["versions"][0]
    assert version["kind"] == KIND_TEXT
    assert version["raw_llm_text"] == "The mean fare is 29.63."
    assert engine.execution_ms == 0  # nothing ran


def test_say_code_reply_executes_and_stores_image(make_engine):
    engine = make_engine([sc.DICT_REPLY, code_reply(TINY_VIZ)])
    view = engine.say(MAIN, "plot something")
    version = view["exchange"]["versions"][0]
    assert version["kind"] == KIND_VISUALIZATION
    assert version["caption"] == "tiny caption"
    assert version["outcome"] == "success"
    image = base64.b64decode(version["image"])
    assert image.startswith(bytes.fromhex("89504e470d0a1a0a"))
    stored = engine.workspace.images_dir / "main-0-v0.png"
    assert stored.read_bytes() == image
    assert engine.execution_ms > 0


def test_say_intercepts_undo_variants(make_engine):
    engine = make_engine([sc.DICT_REPLY, "hello there"])
    engine.say(MAIN, "hi")
    assert INTERCEPTED_UTTERANCES == {"undo"}
    view = engine.say(MAIN, "  Undo  ")
    assert view == {"action": "undone", "target": MAIN, "removed": {"user_text": "hi"}}
    assert engine.session.main_exchanges == []
    # nothing left: the interception surfaces the state machine's own error
    with pytest.raises(NothingToUndo):
        engine.say(MAIN, "undo")
    # no LLM call was spent on any of the three utterances beyond the first
    assert len(engine.client.trace) == 2


def test_lucky_sends_fixed_utterance(make_engine):
    engine = make_engine([sc.DICT_REPLY, "something interesting indeed"])
    view = engine.lucky()
    assert view["exchange"]["user_text"] == LUCKY_UTTERANCE
    assert engine.client.trace[-1]["messages"][-1]["content"] == LUCKY_UTTERANCE


def test_syntax_error_reply_is_text_without_cue(make_engine):
    engine = make_engine([sc.DICT_REPLY, code_reply("def broken(:")])
    view = engine.say(MAIN, "plot")
    assert "cue" not in view
    version = view["exchange"]["versions"][0]
    assert version["kind"] == KIND_TEXT
    assert version["outcome"] == "syntax_error"


def test_runtime_error_carries_cue(make_engine):
    engine = make_engine([sc.DICT_REPLY, code_reply("raise ValueError('boom')")])
    view = engine.say(MAIN, "plot")
    assert view["cue"] == SYSTEM_ERROR_CUE
    version = view["exchange"]["versions"][0]
    assert version["outcome"] == "runtime_error"
    assert "ValueError" in version["note"]


def test_blank_fenced_block_is_text(make_engine):
    engine = make_engine([sc.DICT_REPLY, "Empty:\n```python\n\n```"])
    view = engine.say(MAIN, "plot")
    assert view["exchange"]["versions"][0]["kind"] == KIND_TEXT
    assert engine.execution_ms == 0


def test_redo_rebuilds_context_up_to_the_message(make_engine):
    engine = make_engine(
        [sc.DICT_REPLY, code_reply(TINY_VIZ), "a text answer", code_reply(TINY_VIZ, "Another take:")]
    )
    engine.say(MAIN, "plot fares")
    engine.say(MAIN, "and the mean?")
    view = engine.redo(MessageRef(MAIN, 0))
    assert view["index"] == 0
    assert view["exchange"]["active_index"] == 1
    assert len(view["exchange"]["versions"]) == 2
    # context for the redo holds instructions + few-shot + the utterance, no later history
    redo_messages = engine.client.trace[-1]["messages"]
    assert len(redo_messages) == 6
    assert redo_messages[-1] == {"role": "user", "content": "plot fares"}
    assert (engine.workspace.images_dir / "main-0-v1.png").exists()


def test_thread_say_uses_thread_purpose_and_no_few_shot(make_engine):
    engine = make_engine([sc.DICT_REPLY, code_reply(TINY_VIZ), code_reply(TINY_VIZ, "Tweaked:")])
    engine.say(MAIN, "plot fares")
    thread_id = engine.open_thread(MessageRef(MAIN, 0))
    view = engine.say(thread_id, "make it horizontal")
    assert view["target"] == thread_id
    last = engine.client.trace[-1]
    assert last["purpose"] == "thread"
    assert [m["role"] for m in last["messages"]] == ["system", "user"]
    assert TINY_VIZ in last["messages"][0]["content"]  # anchored program travels as original code
    stored = engine.workspace.images_dir / f"{thread_id}-0-v0.png"
    assert stored.exists()


def test_close_thread_stores_promoted_image(make_engine):
    engine = make_engine([sc.DICT_REPLY, code_reply(TINY_VIZ), code_reply(TINY_VIZ, "Tweaked:")])
    engine.say(MAIN, "plot fares")
    thread_id = engine.open_thread(MessageRef(MAIN, 0))
    engine.say(thread_id, "make it horizontal")
    result = engine.close_thread(thread_id)
    assert result["thread_id"] == thread_id
    assert result["anchor"] == {"target": MAIN, "index": 0}
    assert result["promoted"]["kind"] == KIND_VISUALIZATION
    assert (engine.workspace.images_dir / "main-0-v1.png").exists()
    assert engine.session.main_exchanges[0].assistant.active_index == 1


def test_persist_and_load_round_trip(make_engine, tmp_path, shared_mpl_cache):
    engine = make_engine([sc.DICT_REPLY, "a note to remember"])
    engine.say(MAIN, "remember this")
    config = EngineConfig(workdir=tmp_path, mpl_cache_dir=shared_mpl_cache)
    from conftest import scripted_client

    loaded = SessionEngine.load("s1", scripted_client([]), config, store=SessionStore(tmp_path))
    assert loaded.export() == engine.export()
    assert loaded.created_at == "2026-01-01T00:00:00+00:00"
    assert loaded.client.trace == engine.client.trace


def test_readonly_engine_never_touches_disk(make_engine):
    engine = make_engine([sc.DICT_REPLY, "first", "second"])
    engine.say(MAIN, "one")
    record_path = engine.store.record_path("s1")
    before = record_path.read_bytes()
    engine.readonly = True
    engine.say(MAIN, "two")  # in-memory only; the service refuses these upfront
    engine.edit_dictionary("age", "changed")
    assert record_path.read_bytes() == before


def test_edit_dictionary_persists(make_engine):
    engine = make_engine([sc.DICT_REPLY])
    updated = engine.edit_dictionary("fare", "Ticket price in dollars.")
    assert updated["columns"][2]["description"] == "Ticket price in dollars."
    reloaded = engine.store.load("s1")
    assert reloaded["session"]["dictionary"]["columns"][2]["description"] == "Ticket price in dollars."
