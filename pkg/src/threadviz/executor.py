"""Program execution: scratch workspaces, runner dispatch, stdout parsing, outcomes."""
from __future__ import annotations

import base64
import binascii
import json
import os
import shutil
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

from .conversation import KIND_TEXT, KIND_VISUALIZATION, ResponseVersion
from .errors import SandboxUnavailable

TAG_SUCCESS = "success"
TAG_SYNTAX_ERROR = "syntax_error"
TAG_RUNTIME_ERROR = "runtime_error"
TAG_TIMEOUT = "timeout"

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

SYSTEM_ERROR_CUE = {"error": "system", "cue": ["redo", "undo"]}

# Generous allowance for runner + interpreter startup on top of the program's wall clock.
RUNNER_OVERHEAD_S = 30

_DETAIL_LIMIT = 4000


@dataclass
class ExecutionLimits:
    # mem_mb caps the address space, not resident memory; pandas plus the
    # matplotlib agg backend map well over 512MB of virtual segments.
    wall_ms: int = 30_000
    mem_mb: int = 4_096


@dataclass
class ExecutionOutcome:
    tag: str
    image: bytes | None = None
    caption: str = ""
    detail: str = ""
    duration_ms: int = 0
    note: str | None = None


class Workspace:
    """Per-session disk layout.

    root/
      dataset/<filename>   canonical read-only copy of the uploaded CSV
      runs/NNNN/           per-execution scratch, the program's cwd
      runs/NNNN/workspace/ read-only view holding the dataset, so generated
                           programs can open ./workspace/<filename>
      images/              PNG blobs persisted alongside the session record
    """

    def __init__(self, root: Path, dataset_filename: str, mpl_cache: Path | None = None):
        self.root = Path(root)
        self.dataset_filename = dataset_filename
        self.mpl_cache = mpl_cache

    @property
    def dataset_path(self) -> Path:
        return self.root / "dataset" / self.dataset_filename

    @property
    def images_dir(self) -> Path:
        return self.root / "images"

    @classmethod
    def create(
        cls,
        root: Path,
        dataset_filename: str,
        csv_bytes: bytes,
        mpl_cache: Path | None = None,
    ) -> "Workspace":
        workspace = cls(root, dataset_filename, mpl_cache=mpl_cache)
        dataset_dir = workspace.dataset_path.parent
        dataset_dir.mkdir(parents=True, exist_ok=True)
        workspace.dataset_path.write_bytes(csv_bytes)
        workspace.dataset_path.chmod(0o444)
        workspace.images_dir.mkdir(exist_ok=True)
        if mpl_cache is not None:
            mpl_cache.mkdir(parents=True, exist_ok=True)
            mpl_cache.chmod(0o777)
        return workspace

    def new_scratch(self) -> Path:
        runs = self.root / "runs"
        runs.mkdir(exist_ok=True)
        existing = [int(p.name) for p in runs.iterdir() if p.name.isdigit()]
        scratch = runs / f"{max(existing, default=0) + 1:04d}"
        scratch.mkdir()
        view = scratch / "workspace"
        view.mkdir()
        target = view / self.dataset_filename
        try:
            os.link(self.dataset_path, target)
        except OSError:
            shutil.copyfile(self.dataset_path, target)
            target.chmod(0o444)
        view.chmod(0o555)
        scratch.chmod(0o777)
        return scratch


def default_runner_cmd() -> list[str]:
    configured = os.environ.get("THREADVIZ_RUNNER", "")
    if configured:
        return configured.split()
    return [sys.executable, "-m", "sandbox_runner"]


def _try_png(line: str) -> bytes | None:
    if len(line) < 16:
        return None
    try:
        decoded = base64.b64decode(line, validate=True)
    except (binascii.Error, ValueError):
        return None
    if decoded.startswith(PNG_SIGNATURE):
        return decoded
    return None


def _parse(lines: list[str]) -> tuple[bytes | None, str, int]:
    image: bytes | None = None
    caption_lines: list[str] = []
    extra_images = 0
    for line in lines:
        stripped = line.strip()
        if not stripped:
            continue
        decoded = _try_png(stripped)
        if decoded is not None:
            if image is None:
                image = decoded
                continue
            # The prompt demands a single image; later ones stay in the caption.
            extra_images += 1
        caption_lines.append(stripped)
    return image, "\n".join(caption_lines), extra_images


def parse_stdout(lines: list[str]) -> tuple[bytes | None, str]:
    """First PNG-decoding base64 line is the image; remaining non-empty lines, the caption."""
    image, caption, _ = _parse(lines)
    return image, caption


def execute(
    program: str,
    workspace: Workspace,
    limits: ExecutionLimits | None = None,
    runner_cmd: list[str] | None = None,
) -> ExecutionOutcome:
    """Run a cleaned program in the sandbox and classify the result."""
    limits = limits or ExecutionLimits()
    scratch = workspace.new_scratch()
    request = {
        "program": program,
        "cwd": str(scratch),
        "wall_ms": limits.wall_ms,
        "mem_mb": limits.mem_mb,
    }
    cmd = runner_cmd or default_runner_cmd()
    env = dict(os.environ)
    if workspace.mpl_cache is not None:
        env["MPLCONFIGDIR"] = str(workspace.mpl_cache)
    try:
        proc = subprocess.run(
            cmd,
            input=json.dumps(request).encode("utf-8"),
            capture_output=True,
            timeout=limits.wall_ms / 1000 + RUNNER_OVERHEAD_S,
            env=env,
        )
    except FileNotFoundError as exc:
        raise SandboxUnavailable(f"runner not found: {cmd[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise SandboxUnavailable("runner did not respond within its deadline") from exc
    if proc.returncode != 0:
        raise SandboxUnavailable(proc.stderr.decode("utf-8", errors="replace")[:500])
    try:
        result = json.loads(proc.stdout)
    except ValueError as exc:
        raise SandboxUnavailable("runner emitted invalid JSON") from exc

    status = result["status"]
    duration_ms = int(result.get("duration_ms", 0))
    stderr = result.get("stderr", "")
    if status == "ok":
        image, caption, extra_images = _parse(result.get("stdout", "").split("\n"))
        note = None
        if extra_images:
            note = f"{extra_images} extra image line(s) folded into the caption"
        elif image is None and not caption:
            note = "empty-stdout"
        return ExecutionOutcome(
            tag=TAG_SUCCESS,
            image=image,
            caption=caption,
            detail=stderr,
            duration_ms=duration_ms,
            note=note,
        )
    if status == "syntax_error":
        return ExecutionOutcome(tag=TAG_SYNTAX_ERROR, detail=stderr, duration_ms=duration_ms)
    if status == "timeout":
        return ExecutionOutcome(tag=TAG_TIMEOUT, detail=stderr, duration_ms=duration_ms)
    if status == "runtime_error":
        return ExecutionOutcome(tag=TAG_RUNTIME_ERROR, detail=stderr, duration_ms=duration_ms)
    raise SandboxUnavailable(f"unknown runner status {status!r}")


def outcome_to_response(
    outcome: ExecutionOutcome,
    raw_reply: str,
    program: str | None = None,
) -> tuple[ResponseVersion, dict | None]:
    """Map an execution outcome to the stored version plus an optional UI cue."""
    if outcome.tag == TAG_SUCCESS and outcome.image is not None:
        version = ResponseVersion(
            kind=KIND_VISUALIZATION,
            raw_llm_text=raw_reply,
            program=program,
            image=outcome.image,
            caption=outcome.caption,
            outcome=TAG_SUCCESS,
            note=outcome.note,
        )
        return version, None
    if outcome.tag == TAG_SUCCESS:
        version = ResponseVersion(
            kind=KIND_TEXT,
            raw_llm_text=raw_reply,
            program=program,
            caption=outcome.caption,
            outcome=TAG_SUCCESS,
            note=outcome.note,
        )
        return version, None
    if outcome.tag == TAG_SYNTAX_ERROR:
        # Rendered as a plain text response carrying the reply itself.
        version = ResponseVersion(
            kind=KIND_TEXT,
            raw_llm_text=raw_reply,
            program=program,
            outcome=TAG_SYNTAX_ERROR,
        )
        return version, None
    version = ResponseVersion(
        kind=KIND_TEXT,
        raw_llm_text=raw_reply,
        program=program,
        outcome=outcome.tag,
        note=outcome.detail[-_DETAIL_LIMIT:] or None,
    )
    return version, dict(SYSTEM_ERROR_CUE)
