"""
Core data plumbing for nttlab.

- trace: PacketRecord / MctRecord / TraceDataset, canonical CSV codec,
  message completion records and run-level splits
- errors: exception hierarchy with CLI exit codes
"""

from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    EmptyDatasetError,
    NttLabError,
    NumericError,
    SplitError,
    TraceParseError,
    TraceValidationError,
    TraceWriteError,
    UsageError,
)
from .trace import (
    CSV_HEADER,
    MctRecord,
    PacketRecord,
    RunArrays,
    TraceDataset,
    TraceMeta,
    derive_mct_records,
    make_split,
    read_trace,
    read_trace_file,
    validate_dataset,
    write_trace,
    write_trace_file,
)

__all__ = [
    "CSV_HEADER",
    "CheckpointError",
    "ConfigError",
    "DataError",
    "EmptyDatasetError",
    "MctRecord",
    "NttLabError",
    "NumericError",
    "PacketRecord",
    "RunArrays",
    "SplitError",
    "TraceDataset",
    "TraceMeta",
    "TraceParseError",
    "TraceValidationError",
    "TraceWriteError",
    "UsageError",
    "derive_mct_records",
    "make_split",
    "read_trace",
    "read_trace_file",
    "validate_dataset",
    "write_trace",
    "write_trace_file",
]
