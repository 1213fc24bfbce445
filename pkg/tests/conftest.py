import os
import stat
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # oracle_conversation, golden_scenario

from threadviz.engine import EngineConfig, SessionEngine
from threadviz.executor import ExecutionLimits
from threadviz.gateway import LlmClient, MockBackend, MockScript
from threadviz.store import SessionStore

FIXTURES = Path(__file__).parent / "fixtures"

# Generous enough for a pandas+matplotlib program, small enough that a stuck
# test fails fast.
FAST_LIMITS = ExecutionLimits(wall_ms=5_000, mem_mb=512)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def voyagers_bytes() -> bytes:
    return (FIXTURES / "voyagers.csv").read_bytes()


@pytest.fixture(scope="session")
def shared_mpl_cache(tmp_path_factory) -> Path:
    """One font-cache directory for every execution in the test session."""
    cache = tmp_path_factory.mktemp("mplcache")
    os.chmod(cache, stat.S_IRWXU | stat.S_IRWXG | stat.S_IRWXO)
    return cache


def scripted_client(replies: list[str]) -> LlmClient:
    script = MockScript.from_obj([{"reply": r} for r in replies])
    return LlmClient(MockBackend(script))


@pytest.fixture
def make_engine(tmp_path, voyagers_bytes, shared_mpl_cache):
    """Factory for a real engine over the fixture dataset with scripted replies."""

    def build(replies: list[str], session_id: str = "s1", workdir: Path | None = None) -> SessionEngine:
        root = workdir or tmp_path
        config = EngineConfig(workdir=root, limits=FAST_LIMITS, mpl_cache_dir=shared_mpl_cache)
        return SessionEngine.create(
            session_id,
            "voyagers.csv",
            voyagers_bytes,
            scripted_client(replies),
            config,
            store=SessionStore(root),
            created_at="2026-01-01T00:00:00+00:00",
        )

    return build
