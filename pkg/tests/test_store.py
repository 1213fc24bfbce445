from threadviz.store import SessionStore, canonical_bytes


def test_canonical_bytes_shape():
    record = {"b": 1, "a": "café"}
    blob = canonical_bytes(record)
    assert blob == b'{\n  "b": 1,\n  "a": "caf\xc3\xa9"\n}\n'
    # same dict, same insertion order, same bytes
    assert canonical_bytes({"b": 1, "a": "café"}) == blob


def test_save_load_round_trip(tmp_path):
    store = SessionStore(tmp_path)
    assert not store.exists("s1")
    record = {"session": {"id": "s1"}, "trace": []}
    store.save("s1", record)
    assert store.exists("s1")
    assert store.load("s1") == record
    assert store.record_path("s1").read_bytes() == canonical_bytes(record)


def test_save_leaves_no_temp_files(tmp_path):
    store = SessionStore(tmp_path)
    store.save("s1", {"v": 1})
    store.save("s1", {"v": 2})
    leftovers = [p.name for p in store.session_root("s1").iterdir() if p.name != "session.json"]
    assert leftovers == []
    assert store.load("s1") == {"v": 2}


def test_list_sessions_sorted(tmp_path):
    store = SessionStore(tmp_path)
    assert store.list_sessions() == []
    for sid in ("zeta", "alpha", "mid"):
        store.save(sid, {})
    assert store.list_sessions() == ["alpha", "mid", "zeta"]
    # directories without a record do not count
    (tmp_path / "sessions" / "broken").mkdir()
    assert "broken" not in store.list_sessions()
