"""Single-shot execution: syntax-check, spawn a confined child, classify the result.

Request fields: program, cwd, wall_ms, mem_mb. Result fields: status (ok |
syntax_error | runtime_error | timeout), stdout, stderr, duration_ms. The wall
clock covers interpreter startup inside the child, so callers should budget
limits accordingly. When invoked as root the child drops to an unprivileged
user (env SANDBOX_RUNNER_USER, default "nobody") and, where the `unshare`
binary permits, runs without network access; the working directory must be
writable by that user.
"""
from __future__ import annotations

import os
import resource
import shutil
import signal
import subprocess
import sys
import time
import traceback

STATUS_OK = "ok"
STATUS_SYNTAX_ERROR = "syntax_error"
STATUS_RUNTIME_ERROR = "runtime_error"
STATUS_TIMEOUT = "timeout"

MAX_STREAM_BYTES = 10 * 1024 * 1024

_unshare_works: bool | None = None


def _network_isolation_prefix() -> list[str]:
    global _unshare_works
    if os.geteuid() != 0:
        return []
    if _unshare_works is None:
        unshare = shutil.which("unshare")
        if unshare is None:
            _unshare_works = False
        else:
            probe = subprocess.run(
                [unshare, "-n", "true"], capture_output=True, timeout=10
            )
            _unshare_works = probe.returncode == 0
    return ["unshare", "-n"] if _unshare_works else []


def _limits(mem_mb: int):
    def apply() -> None:
        limit = mem_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
    return apply


def _decode(raw: bytes, stderr_notes: list[str], stream: str) -> str:
    if len(raw) > MAX_STREAM_BYTES:
        raw = raw[:MAX_STREAM_BYTES]
        stderr_notes.append(f"[{stream} truncated at {MAX_STREAM_BYTES} bytes]")
    return raw.decode("utf-8", errors="backslashreplace")


def run(request: dict) -> dict:
    program = request["program"]
    cwd = request["cwd"]
    wall_ms = int(request.get("wall_ms", 30_000))
    mem_mb = int(request.get("mem_mb", 512))
    if wall_ms <= 0:
        raise ValueError("wall_ms must be positive")

    start = time.monotonic()
    try:
        compile(program, "<program>", "exec")
    except SyntaxError as exc:
        # Nothing was executed.
        return {
            "status": STATUS_SYNTAX_ERROR,
            "stdout": "",
            "stderr": "".join(traceback.format_exception_only(exc)),
            "duration_ms": int((time.monotonic() - start) * 1000),
        }

    cmd = _network_isolation_prefix() + [sys.executable, "-m", "sandbox_runner._child"]
    env = dict(os.environ)
    env["HOME"] = cwd
    env.setdefault("MPLBACKEND", "Agg")
    proc = subprocess.Popen(
        cmd,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        cwd=cwd,
        env=env,
        start_new_session=True,
        preexec_fn=_limits(mem_mb),
    )
    timed_out = False
    try:
        out, err = proc.communicate(program.encode("utf-8"), timeout=wall_ms / 1000)
    except subprocess.TimeoutExpired:
        timed_out = True
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
    duration_ms = int((time.monotonic() - start) * 1000)

    notes: list[str] = []
    stdout = _decode(out or b"", notes, "stdout")
    stderr = _decode(err or b"", notes, "stderr")
    if notes:
        stderr = stderr + ("\n" if stderr else "") + "\n".join(notes)

    if timed_out:
        return {
            "status": STATUS_TIMEOUT,
            "stdout": stdout,
            "stderr": stderr,
            "duration_ms": max(duration_ms, wall_ms),
        }
    if proc.returncode == 0:
        status = STATUS_OK
    else:
        status = STATUS_RUNTIME_ERROR
        if proc.returncode < 0 and not stderr:
            stderr = f"killed by signal {-proc.returncode}"
    return {
        "status": status,
        "stdout": stdout,
        "stderr": stderr,
        "duration_ms": duration_ms,
    }
