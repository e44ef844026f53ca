"""Trace files with their provenance sidecar (`<trace>.meta.json`)."""

import logging
import os

from ..core.errors import DataError
from ..core.trace import TraceDataset, TraceMeta, read_trace_file, write_trace_file
from ..utils.fsio import atomic_write_json, read_json

logger = logging.getLogger(__name__)

META_SUFFIX = ".meta.json"


def meta_path(trace_path: str) -> str:
    return trace_path + META_SUFFIX


def write_trace_artifact(dataset: TraceDataset, path: str) -> int:
    """Write the CSV and its sidecar; returns the CSV byte count."""
    n = write_trace_file(dataset, path)
    meta = dataset.meta.to_dict()
    meta["packet_count"] = dataset.packet_count()
    atomic_write_json(meta_path(path), meta)
    logger.info(f"Trace written: {path} ({dataset.packet_count()} packets, {n} bytes)")
    return n


def read_trace_artifact(path: str) -> TraceDataset:
    """Read a trace and attach its sidecar metadata when present.

    Raises:
        DataError: the trace file is missing.
    """
    if not os.path.exists(path):
        raise DataError(f"trace file not found: {path}")
    dataset = read_trace_file(path)
    sidecar = meta_path(path)
    if os.path.exists(sidecar):
        doc = read_json(sidecar)
        doc.pop("packet_count", None)
        dataset.meta = TraceMeta.from_dict(doc)
    else:
        logger.debug(f"no sidecar for {path}; provenance unknown")
    return dataset
