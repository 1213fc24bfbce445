"""Child bootstrap: read the program from stdin, shed privileges, exec it."""
from __future__ import annotations

import os
import sys


def _drop_privileges() -> None:
    if os.geteuid() != 0:
        return
    username = os.environ.get("SANDBOX_RUNNER_USER", "nobody")
    if username in ("", "0", "root"):
        return
    import pwd

    try:
        record = pwd.getpwnam(username)
    except KeyError:
        return
    os.setgroups([])
    os.setgid(record.pw_gid)
    os.setuid(record.pw_uid)


def _pandas_compat(source: str) -> None:
    # Generated analysis code targets the pandas-1 API; restore the removed
    # iterator methods it relies on, but only when the program uses them.
    if "iteritems" not in source:
        return
    try:
        import pandas as pd
    except Exception:
        return
    if not hasattr(pd.Series, "iteritems"):
        pd.Series.iteritems = pd.Series.items
    if not hasattr(pd.DataFrame, "iteritems"):
        pd.DataFrame.iteritems = pd.DataFrame.items


def main() -> None:
    source = sys.stdin.read()
    _drop_privileges()
    _pandas_compat(source)
    code = compile(source, "<program>", "exec")
    exec(code, {"__name__": "__main__"})


if __name__ == "__main__":
    main()
