"""
Parameter checkpoint format.

    b"nttlab-ckpt-1\\n"
    8-byte little-endian unsigned header length
    UTF-8 JSON header {"version", "index": {name: {"offset", "shape"}}, "meta"}
    raw little-endian float64 data, arrays in index order

Offsets are relative to the start of the data section. JSON keys are sorted
so identical parameters and metadata give identical bytes.
"""

import json
import logging
import struct
from typing import Any, Dict, Tuple

import numpy as np

from ..core.errors import CheckpointError
from ..utils.fsio import atomic_write_bytes

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = "nttlab-ckpt-1"
_MAGIC = (CHECKPOINT_VERSION + "\n").encode("ascii")
_LEN = struct.Struct("<Q")


def checkpoint_bytes(arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> bytes:
    index: Dict[str, Dict] = {}
    chunks = []
    offset = 0
    for name in sorted(arrays):
        data = np.ascontiguousarray(arrays[name], dtype="<f8")
        index[name] = {"offset": offset, "shape": list(data.shape)}
        raw = data.tobytes()
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"version": CHECKPOINT_VERSION, "index": index, "meta": meta},
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    ).encode("utf-8")
    return b"".join([_MAGIC, _LEN.pack(len(header)), header, *chunks])


def parse_checkpoint(blob: bytes) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Decode checkpoint bytes into (arrays, meta).

    Raises:
        CheckpointError: bad magic, truncated file or inconsistent index.
    """
    if not blob.startswith(_MAGIC):
        raise CheckpointError(f"not a {CHECKPOINT_VERSION} checkpoint")
    pos = len(_MAGIC)
    if len(blob) < pos + _LEN.size:
        raise CheckpointError("truncated checkpoint header")
    (header_len,) = _LEN.unpack_from(blob, pos)
    pos += _LEN.size
    try:
        header = json.loads(blob[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable checkpoint header: {e}") from e
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')!r}")
    data = blob[pos + header_len :]

    arrays: Dict[str, np.ndarray] = {}
    for name, entry in header["index"].items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = int(entry["offset"])
        end = start + 8 * count
        if end > len(data):
            raise CheckpointError(f"checkpoint truncated inside {name}")
        arrays[name] = np.frombuffer(data[start:end], dtype="<f8").astype(np.float64).reshape(shape)
    return arrays, header.get("meta", {})


def save_checkpoint(path: str, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> int:
    """Write atomically; returns the byte count."""
    n = atomic_write_bytes(path, checkpoint_bytes(arrays, meta))
    logger.info(f"Checkpoint written: {path} ({len(arrays)} arrays)")
    return n


def load_checkpoint(path: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return parse_checkpoint(blob)
