"""Atomic artifact writing, CSV formatting and the run manifest."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % float(x)


def csv_text(header, rows, comments=()) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    lines += [f"# {c}" for c in comments]
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str) -> Path:
    """Write ``text`` next to ``path`` and rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class ArtifactWriter:
    """Collects outputs of one run and records them in ``manifest.json``."""

    def __init__(self, out_dir, command: str, overrides: dict | None = None):
        self.out_dir = Path(out_dir)
        self.command = command
        self.overrides = dict(overrides or {})
        self.files = {}

    def text(self, name: str, text: str) -> Path:
        path = atomic_write(self.out_dir / name, text)
        self.files[name] = sha256(path)
        return path

    def csv(self, name: str, header, rows, comments=()) -> Path:
        return self.text(name, csv_text(header, rows, comments))

    def json(self, name: str, obj) -> Path:
        return self.text(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def finish(self) -> Path:
        manifest = {"command": self.command, "overrides": self.overrides,
                    "outputs": [{"file": k, "sha256": v} for k, v in sorted(self.files.items())]}
        return atomic_write(self.out_dir / "manifest.json",
                            json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
