"""On-disk session persistence: one canonical JSON record per session."""
from __future__ import annotations

import json
import os
from pathlib import Path


def canonical_bytes(record: dict) -> bytes:
    return (json.dumps(record, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


class SessionStore:
    def __init__(self, workdir: Path):
        self.workdir = Path(workdir)

    def session_root(self, session_id: str) -> Path:
        return self.workdir / "sessions" / session_id

    def record_path(self, session_id: str) -> Path:
        return self.session_root(session_id) / "session.json"

    def exists(self, session_id: str) -> bool:
        return self.record_path(session_id).is_file()

    def list_sessions(self) -> list[str]:
        root = self.workdir / "sessions"
        if not root.is_dir():
            return []
        return sorted(p.name for p in root.iterdir() if (p / "session.json").is_file())

    def save(self, session_id: str, record: dict) -> None:
        path = self.record_path(session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_bytes(canonical_bytes(record))
        os.replace(tmp, path)

    def load(self, session_id: str) -> dict:
        return json.loads(self.record_path(session_id).read_text(encoding="utf-8"))
