"""
Exception hierarchy shared by every nttlab module.

Each class carries the process exit code the CLI maps it to:
0 success, 1 usage error, 2 data/validation error, 3 numeric failure.
"""

from typing import Optional


class NttLabError(Exception):
    """Base class for all nttlab errors."""

    exit_code = 1


class UsageError(NttLabError):
    """Invalid combination of command-line options or plan fields."""

    exit_code = 1


class DataError(NttLabError):
    """Input data or configuration failed validation."""

    exit_code = 2


class EmptyDatasetError(DataError):
    def __init__(self, message: str = "empty dataset"):
        super().__init__(message)


class TraceParseError(DataError):
    """A trace CSV row could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TraceValidationError(DataError):
    """A PacketRecord / dataset invariant does not hold."""

    def __init__(self, invariant: str, detail: str = ""):
        text = f"invariant violated: {invariant}"
        if detail:
            text += f" ({detail})"
        super().__init__(text)
        self.invariant = invariant


class TraceWriteError(DataError):
    """The destination sink refused a write."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"write failed at byte {byte_offset}: {message}")
        self.byte_offset = byte_offset


class WindowError(DataError):
    """Records cannot form a model input window (mixed runs, too short)."""


class SplitError(DataError):
    """Not enough simulation runs to honour the requested split."""


class ConfigError(DataError):
    """SimConfig, NTTConfig or plan document is inconsistent."""


class CheckpointError(DataError):
    """Checkpoint file is malformed or incompatible with the requested variant."""


class SimulationInvariantError(NttLabError):
    """The simulator violated one of its own invariants (a bug, not bad input)."""

    exit_code = 3


class NumericError(NttLabError):
    """Numerical failure in the training stack."""

    exit_code = 3


class NonFiniteError(NumericError):
    """An operation produced NaN or Inf."""

    def __init__(self, op: str):
        super().__init__(f"non-finite values produced by {op}")
        self.op = op


class TrainingDivergedError(NumericError):
    """Loss became NaN during training."""

    def __init__(self, lr: float, batch_index: int, epoch: Optional[int] = None):
        where = f"batch {batch_index}" + (f" of epoch {epoch}" if epoch is not None else "")
        super().__init__(f"loss diverged (NaN) at {where} with lr={lr:g}")
        self.lr = lr
        self.batch_index = batch_index
        self.epoch = epoch


class NonDeterminismError(NumericError):
    """Two identical forward passes returned different values."""


class ShapeError(ValueError):
    """Operand shapes disagree."""


class GraphStateError(RuntimeError):
    """Backward called without a recorded forward, or twice on one graph."""
