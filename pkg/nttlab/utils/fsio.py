"""Atomic file output (temp file in the target directory + os.replace)."""

import json
import os
import tempfile
from typing import Any, Callable, IO


def atomic_write(path: str, writer: Callable[[IO[bytes]], Any]) -> Any:
    """Run `writer` on a temp file next to `path`, then rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            result = writer(f)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return result


def atomic_write_bytes(path: str, data: bytes) -> int:
    return atomic_write(path, lambda f: f.write(data))


def atomic_write_text(path: str, text: str) -> int:
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: str, obj: Any) -> int:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    return atomic_write_text(path, text)


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
