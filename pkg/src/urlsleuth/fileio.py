"""Atomic file writing and guarded JSON reading.

Writers go through a temp file plus rename so concurrent readers never
observe a partial artifact; JSON uses sorted keys so equal payloads are
byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import ArtifactError


def write_text_atomic(text: str, path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(payload: dict, path) -> None:
    write_text_atomic(json.dumps(payload, sort_keys=True, indent=1) + "\n", path)


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"artifact file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"artifact file {path} is truncated or corrupt: {exc}") from exc
    if not isinstance(payload, dict):
        raise ArtifactError(f"artifact file {path} does not hold an object")
    return payload
