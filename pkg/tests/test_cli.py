import json

import pytest
from click.testing import CliRunner

import golden_scenario as sc
from test_engine import TINY_VIZ, code_reply
from threadviz.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def transcript_file(tmp_path):
    doc = {
        "version": 1,
        "dataset": "voyagers.csv",
        "steps": [
            {"action": "say", "text": "plot the fares"},
            {"action": "say", "text": "what is the mean fare?"},
        ],
        "llm_script": [
            {"reply": sc.DICT_REPLY},
            {"reply": code_reply(TINY_VIZ)},
            {"reply": "The mean fare is 29.63."},
        ],
    }
    path = tmp_path / "transcript.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def dataset_file(tmp_path, voyagers_bytes):
    path = tmp_path / "voyagers.csv"
    path.write_bytes(voyagers_bytes)
    return path


def test_replay_writes_export(runner, tmp_path, transcript_file, dataset_file):
    out = tmp_path / "session.json"
    result = runner.invoke(
        main,
        ["replay", "--transcript", str(transcript_file), "--dataset", str(dataset_file), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "replayed 2 step(s)" in result.output
    export = json.loads(out.read_text())
    assert [e["user_text"] for e in export["main_exchanges"]] == ["plot the fares", "what is the mean fare?"]
    assert export["session_id"].startswith("replay-")


def test_replay_is_deterministic_across_invocations(runner, tmp_path, transcript_file, dataset_file):
    outs = [tmp_path / "a.json", tmp_path / "b.json"]
    for out in outs:
        result = runner.invoke(
            main,
            ["replay", "--transcript", str(transcript_file), "--dataset", str(dataset_file), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_replay_report_dir(runner, tmp_path, transcript_file, dataset_file):
    out = tmp_path / "session.json"
    report = tmp_path / "report"
    result = runner.invoke(
        main,
        [
            "replay",
            "--transcript", str(transcript_file),
            "--dataset", str(dataset_file),
            "--out", str(out),
            "--report-dir", str(report),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (report / "steps.csv").exists()
    assert (report / "tree.dot").exists()
    assert (report / "tree.png").exists()
    assert list((report / "figures").glob("*.png"))
    assert "report:" in result.output


def test_replay_keeps_workdir_when_asked(runner, tmp_path, transcript_file, dataset_file):
    out = tmp_path / "session.json"
    workdir = tmp_path / "work"
    result = runner.invoke(
        main,
        [
            "replay",
            "--transcript", str(transcript_file),
            "--dataset", str(dataset_file),
            "--out", str(out),
            "--workdir", str(workdir),
        ],
    )
    assert result.exit_code == 0, result.output
    session_id = json.loads(out.read_text())["session_id"]
    assert (workdir / "sessions" / session_id).is_dir()


def test_replay_rejects_bad_transcript(runner, tmp_path, dataset_file):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"version": 99, "dataset": "voyagers.csv"}))
    result = runner.invoke(
        main,
        ["replay", "--transcript", str(bad), "--dataset", str(dataset_file), "--out", str(tmp_path / "o.json")],
    )
    assert result.exit_code != 0
    assert "unsupported transcript version" in result.output
    assert "Traceback" not in result.output


def test_replay_requires_existing_files(runner, tmp_path, dataset_file):
    result = runner.invoke(
        main,
        ["replay", "--transcript", str(tmp_path / "missing.json"), "--dataset", str(dataset_file), "--out", "o"],
    )
    assert result.exit_code == 2


@pytest.fixture
def session_export_file(runner, tmp_path, transcript_file, dataset_file):
    out = tmp_path / "session.json"
    result = runner.invoke(
        main,
        ["replay", "--transcript", str(transcript_file), "--dataset", str(dataset_file), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    return out


def test_tree_dot_to_stdout(runner, session_export_file):
    result = runner.invoke(main, ["tree", "--session", str(session_export_file)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("digraph conversation {")
    assert "plot the fares" in result.output


def test_tree_json_to_file(runner, tmp_path, session_export_file):
    out = tmp_path / "tree.json"
    result = runner.invoke(
        main, ["tree", "--session", str(session_export_file), "--format", "json", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    tree = json.loads(out.read_text())
    assert tree["chunk_count"] == 1
    assert len(tree["nodes"]) == 2


def test_tree_accepts_stored_record_wrapper(runner, tmp_path, session_export_file):
    wrapped = tmp_path / "record.json"
    wrapped.write_text(json.dumps({"session": json.loads(session_export_file.read_text()), "trace": []}))
    result = runner.invoke(main, ["tree", "--session", str(wrapped)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("digraph conversation {")


def test_tree_rejects_invalid_json(runner, tmp_path):
    garbage = tmp_path / "g.json"
    garbage.write_text("{nope")
    result = runner.invoke(main, ["tree", "--session", str(garbage)])
    assert result.exit_code != 0
    assert "not valid JSON" in result.output


def test_dictionary_markdown(runner, dataset_file):
    result = runner.invoke(main, ["dictionary", "--dataset", str(dataset_file)])
    assert result.exit_code == 0, result.output
    assert "| Data Type " in result.output
    assert "| fare " in result.output
    assert "7.25 – 71.83" in result.output


def test_dictionary_json(runner, dataset_file):
    result = runner.invoke(main, ["dictionary", "--dataset", str(dataset_file), "--json"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["row_count"] == 5
    assert [c["name"] for c in data["columns"]] == ["name", "age", "fare"]


def test_help_screens(runner):
    for args in ([], ["serve", "--help"], ["replay", "--help"], ["tree", "--help"], ["dictionary", "--help"]):
        result = runner.invoke(main, args or ["--help"])
        assert result.exit_code == 0
        assert "Usage" in result.output
