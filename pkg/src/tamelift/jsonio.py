"""Canonical JSON text and input loading (files, stdin, bundled fixtures)."""

from __future__ import annotations

import json
import re
import sys
from importlib import resources

FIXTURE_PREFIX = "fixture:"

_INT_LIST = re.compile(r"\[\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\]")


def dumps(obj) -> str:
    """Indented JSON with integer lists (exponent vectors) kept on one line."""
    text = json.dumps(obj, indent=2)
    return _INT_LIST.sub(lambda m: "[" + ", ".join(v.strip() for v in m.group(1).split(",")) + "]", text) + "\n"


def fixture_names() -> list[str]:
    root = resources.files("tamelift") / "fixtures"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str):
    path = resources.files("tamelift") / "fixtures" / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}; available: {', '.join(fixture_names())}")
    return json.loads(path.read_text())


def load(source: str | None):
    """Parse JSON from a path, '-' or None (stdin), or 'fixture:<name>'."""
    if source is None or source == "-":
        return json.load(sys.stdin)
    if source.startswith(FIXTURE_PREFIX):
        return load_fixture(source[len(FIXTURE_PREFIX):])
    with open(source) as fh:
        return json.load(fh)


def write(obj, path: str | None) -> None:
    text = dumps(obj)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
