"""Command line entry points: serve the API, replay transcripts, draw trees."""
from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path

import click

from .errors import ThreadvizError
from .executor import ExecutionLimits
from .replay import build_tree, export_tree, load_transcript, replay, write_report
from .store import canonical_bytes

WORKDIR_ENV = "THREADVIZ_WORKDIR"
DEFAULT_WORKDIR = "threadviz-workdir"


def _default_workdir() -> Path:
    return Path(os.environ.get(WORKDIR_ENV, DEFAULT_WORKDIR))


@click.group()
def main() -> None:
    """Conversational visual analytics over tabular data."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--mock-script",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Serve scripted LLM replies from this JSON file instead of a live backend.",
)
@click.option(
    "--workdir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help=f"Session storage root (default: ${WORKDIR_ENV} or ./{DEFAULT_WORKDIR}).",
)
@click.option("--timeout-ms", default=60_000, show_default=True, type=int, help="LLM request timeout.")
def serve(host: str, port: int, mock_script: Path | None, workdir: Path | None, timeout_ms: int) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .service import ServiceConfig, create_app

    logging.basicConfig(level=logging.INFO)
    config = ServiceConfig(
        workdir=workdir or _default_workdir(),
        mock_script=mock_script,
        timeout_ms=timeout_ms,
    )
    config.workdir.mkdir(parents=True, exist_ok=True)
    uvicorn.run(create_app(config), host=host, port=port)


@main.command("replay")
@click.option(
    "--transcript",
    "transcript_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option(
    "--dataset",
    "dataset_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--report-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Also write steps.csv, rendered figures, and the conversation tree here.",
)
@click.option(
    "--workdir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Keep the replay working area here instead of a temporary directory.",
)
@click.option("--exec-timeout-ms", default=None, type=int, help="Per-program execution wall limit.")
def replay_command(
    transcript_path: Path,
    dataset_path: Path,
    out_path: Path,
    report_dir: Path | None,
    workdir: Path | None,
    exec_timeout_ms: int | None,
) -> None:
    """Replay a scripted transcript deterministically and export the session."""
    csv_bytes = dataset_path.read_bytes()
    limits = ExecutionLimits(wall_ms=exec_timeout_ms) if exec_timeout_ms else None

    try:
        transcript = load_transcript(transcript_path)

        def run(into: Path):
            return replay(transcript, csv_bytes, into, limits=limits)

        if workdir is not None:
            workdir.mkdir(parents=True, exist_ok=True)
            result = run(workdir)
        else:
            with tempfile.TemporaryDirectory(prefix="threadviz-replay-") as scratch:
                result = run(Path(scratch))
    except ThreadvizError as exc:
        raise click.ClickException(str(exc)) from exc
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(result.export_bytes)
    if report_dir is not None:
        written = write_report(result, report_dir)
        click.echo(f"report: {len(written)} file(s) under {report_dir}")
    click.echo(
        f"replayed {len(result.rows) - 1} step(s) as {result.session_id} "
        f"({result.execution_ms} ms executing) -> {out_path}"
    )


@main.command("tree")
@click.option(
    "--session",
    "session_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Session export JSON, as written by replay --out or GET /sessions/{id}/export.",
)
@click.option("--format", "fmt", type=click.Choice(["dot", "json"]), default="dot", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
def tree_command(session_path: Path, fmt: str, out_path: Path | None) -> None:
    """Render the discourse-chunk tree of an exported session."""
    try:
        export = json.loads(session_path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise click.ClickException(f"{session_path} is not valid JSON: {exc}") from exc
    if "session" in export and "main_exchanges" not in export:
        export = export["session"]  # accept a stored record as well as a bare export
    payload = export_tree(build_tree(export), fmt)
    if out_path is None:
        click.echo(payload.decode("utf-8"), nl=False)
    else:
        out_path.write_bytes(payload)
        click.echo(f"wrote {out_path}")


@main.command("dictionary")
@click.option(
    "--dataset",
    "dataset_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--json", "as_json", is_flag=True, help="Emit the dictionary as JSON instead of markdown.")
def dictionary_command(dataset_path: Path, as_json: bool) -> None:
    """Infer and print the data dictionary for a CSV file (no LLM involved)."""
    from .dictionary import infer_schema, render_markdown

    dictionary = infer_schema(dataset_path.read_bytes(), dataset_path.name)
    if as_json:
        click.echo(canonical_bytes(dictionary.to_dict()).decode("utf-8"), nl=False)
    else:
        click.echo(render_markdown(dictionary))


if __name__ == "__main__":
    main()
