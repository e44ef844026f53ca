"""
Artifact integrity helpers.

Every trace sidecar, checkpoint and report row carries the SHA-256 of the
canonical JSON of the configuration that produced it, so a matrix can be
re-derived from its artifacts alone.
"""

import hashlib
import json
import logging
from typing import Any

logger = logging.getLogger(__name__)


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, no whitespace, repr-exact floats."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj: Any) -> str:
    """Hex SHA-256 of the canonical JSON of `obj`."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def short_hash(obj: Any, length: int = 12) -> str:
    """Abbreviated config hash used in file names and table cells."""
    return config_hash(obj)[:length]


def file_digest(path: str) -> str:
    """Hex SHA-256 of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_file_digest(path: str, expected: str) -> bool:
    """True when the file on disk still matches the recorded digest."""
    actual = file_digest(path)
    if actual != expected:
        logger.warning(f"Digest mismatch for {path}: {actual[:12]} != {expected[:12]}")
        return False
    return True
