"""Protocol endpoint: one JSON request on stdin, one JSON result on stdout."""
from __future__ import annotations

import json
import sys

from .runner import run


def main() -> None:
    try:
        request = json.loads(sys.stdin.read())
        result = run(request)
    except Exception as exc:  # protocol failure, distinct from program failure
        print(f"sandbox-runner: {exc}", file=sys.stderr)
        sys.exit(2)
    json.dump(result, sys.stdout)
    sys.stdout.write("\n")
    sys.exit(0)


if __name__ == "__main__":
    main()
