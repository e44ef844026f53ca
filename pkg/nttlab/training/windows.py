"""
Window extraction.

A WindowSet keeps one base feature matrix per run plus the end index of
every window, and materialises windows only when a batch is requested. The
dt column depends on each window's newest packet and is filled per batch.

DELAY: one window every `stride` packets within a run, each ending at a
packet with at least window_length - 1 predecessors in the run.
MCT: one window per message whose first packet has that much history; the
window ends at the message's first packet and the target is ln(mct).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from ..core.errors import DataError, EmptyDatasetError
from ..core.tasks import Task
from ..core.trace import TraceDataset, derive_mct_records
from ..model.features import FeatureSchema, SequenceWindow, feature_rows, mask_features
from .normalizer import Normalizer

logger = logging.getLogger(__name__)


@dataclass
class _RunSource:
    sim_id: int
    base: np.ndarray  # [N x F], dt column left at zero
    send_time: np.ndarray
    delay: np.ndarray
    # ln(mct) of the run's messages in completion order, with completion times
    done_log_mct: np.ndarray
    done_time: np.ndarray


@dataclass
class WindowBatch:
    """Masked model inputs plus raw targets and baseline histories."""

    task: Task
    features: np.ndarray  # [B x L x F], masked
    targets: np.ndarray  # raw: delay seconds or ln(mct seconds)
    targets_normalized: np.ndarray
    message_size: np.ndarray  # bytes (MCT), zeros for DELAY
    sim_ids: np.ndarray
    histories: List[np.ndarray]  # what the naive baselines observe, per window
    history_matrix: Optional[np.ndarray] = None  # DELAY: the same histories as [B x (L-1)]

    def __len__(self) -> int:
        return int(self.targets.shape[0])


class WindowSet:
    """Lazily materialised windows of one task over one dataset."""

    def __init__(
        self,
        task: Task,
        window_length: int,
        schema: FeatureSchema,
        normalizer: Normalizer,
        sources: List[_RunSource],
        run_index: np.ndarray,
        end: np.ndarray,
        targets: np.ndarray,
        message_size: np.ndarray,
        start_time: np.ndarray,
        label: str = "",
    ):
        self.task = task
        self.window_length = window_length
        self.schema = schema
        self.normalizer = normalizer
        self.sources = sources
        self.run_index = run_index
        self.end = end
        self.targets = targets
        self.message_size = message_size
        self.start_time = start_time
        self.label = label

    def __len__(self) -> int:
        return int(self.end.shape[0])

    def run_ids(self) -> List[int]:
        """Simulation runs contributing at least one window."""
        return sorted({self.sources[i].sim_id for i in np.unique(self.run_index)})

    def _gather(self, indices: np.ndarray) -> np.ndarray:
        L = self.window_length
        F = self.schema.width
        out = np.empty((len(indices), L, F), dtype=np.float64)
        offsets = np.arange(L - 1, -1, -1)
        n = self.normalizer
        for k, w in enumerate(indices):
            src = self.sources[self.run_index[w]]
            rows = self.end[w] - offsets
            out[k] = src.base[rows]
            t = src.send_time[rows]
            out[k, :, self.schema.dt_col] = ((t - t[-1]) - n.dt_mean) / n.dt_std
        return out

    def raw_features(self, indices: Sequence[int]) -> np.ndarray:
        """Unmasked features [B x L x F]."""
        return self._gather(np.asarray(indices, dtype=np.int64))

    def batch(self, indices: Sequence[int]) -> WindowBatch:
        idx = np.asarray(indices, dtype=np.int64)
        features = mask_features(self._gather(idx), self.schema)
        targets = self.targets[idx]
        if self.task is Task.DELAY:
            norm = self.normalizer.normalize_delay(targets)
            L = self.window_length
            matrix = np.empty((len(idx), L - 1), dtype=np.float64)
            for k, w in enumerate(idx):
                src = self.sources[self.run_index[w]]
                matrix[k] = src.delay[self.end[w] - L + 1 : self.end[w]]
            if L > 1:
                histories = list(matrix)
            else:
                histories = [np.array([self.normalizer.delay_mean])] * len(idx)
        else:
            norm = self.normalizer.normalize_log_mct(targets)
            histories = [self.mct_history(int(w)) for w in idx]
            matrix = None
        return WindowBatch(
            task=self.task,
            features=features,
            targets=targets,
            targets_normalized=norm,
            message_size=self.message_size[idx],
            sim_ids=np.array([self.sources[self.run_index[w]].sim_id for w in idx], dtype=np.int64),
            histories=histories,
            history_matrix=matrix if self.window_length > 1 else None,
        )

    def mct_history(self, index: int) -> np.ndarray:
        """ln(mct) of the run's messages completed before window `index`'s message started."""
        src = self.sources[self.run_index[index]]
        count = int(np.searchsorted(src.done_time, self.start_time[index], side="right"))
        if count == 0:
            return np.array([self.normalizer.log_mct_mean])
        return src.done_log_mct[:count].copy()

    def batches(self, batch_size: int, order: Optional[np.ndarray] = None) -> Iterator[WindowBatch]:
        order = np.arange(len(self)) if order is None else order
        for start in range(0, len(order), batch_size):
            yield self.batch(order[start : start + batch_size])

    def __iter__(self) -> Iterator[SequenceWindow]:
        for w in range(len(self)):
            src = self.sources[self.run_index[w]]
            yield SequenceWindow(
                features=self._gather(np.array([w]))[0],
                target_delay=float(src.delay[self.end[w]]),
                schema=self.schema,
                aux=int(self.message_size[w]) if self.task is Task.MCT else None,
                sim_id=src.sim_id,
            )

    def subset(self, indices: Sequence[int]) -> "WindowSet":
        idx = np.asarray(indices, dtype=np.int64)
        return WindowSet(
            self.task,
            self.window_length,
            self.schema,
            self.normalizer,
            self.sources,
            self.run_index[idx],
            self.end[idx],
            self.targets[idx],
            self.message_size[idx],
            self.start_time[idx],
            self.label,
        )


def _run_source(arrays, schema: FeatureSchema, normalizer: Normalizer, mct_by_run) -> _RunSource:
    base = feature_rows(
        arrays.send_time,
        arrays.size,
        arrays.receiver_id,
        arrays.delay,
        arrays.send_time,  # dt placeholder (overwritten per window)
        schema,
        normalizer,
    )
    done = sorted(mct_by_run.get(arrays.sim_id, []), key=lambda m: (m.completion_time, m.message_id))
    done_log = np.log(np.array([m.mct for m in done], dtype=np.float64))
    return _RunSource(
        sim_id=arrays.sim_id,
        base=base,
        send_time=arrays.send_time,
        delay=arrays.delay,
        done_log_mct=done_log,
        done_time=np.array([m.completion_time for m in done], dtype=np.float64),
    )


def make_windows(
    dataset: TraceDataset,
    window_length: int,
    stride: int,
    task: Task,
    schema: FeatureSchema,
    normalizer: Normalizer,
    label: str = "",
    target_length: Optional[int] = None,
) -> WindowSet:
    """All windows of `task` in `dataset`. Runs shorter than the window contribute none.

    With `target_length`, windows only end where a window of that length could, so
    sets built for different lengths share the same targets.
    """
    if window_length < 1 or stride < 1:
        raise ValueError("window_length and stride must be >= 1")
    first_end = max(window_length, target_length or 0) - 1
    if not dataset.records:
        raise EmptyDatasetError()

    mct_by_run: Dict[int, list] = {}
    mct_lookup = {}
    if task is Task.MCT:
        for m in derive_mct_records(dataset):
            mct_by_run.setdefault(m.sim_id, []).append(m)
            mct_lookup[(m.sim_id, m.message_id)] = m

    sources: List[_RunSource] = []
    run_index, ends, targets, sizes, starts = [], [], [], [], []
    for arrays in dataset.all_run_arrays():
        n = len(arrays)
        src_i = len(sources)
        sources.append(_run_source(arrays, schema, normalizer, mct_by_run))
        if n < window_length:
            continue
        if task is Task.DELAY:
            run_ends = np.arange(first_end, n, stride, dtype=np.int64)
            run_index.append(np.full(len(run_ends), src_i, dtype=np.int64))
            ends.append(run_ends)
            targets.append(arrays.delay[run_ends])
            sizes.append(np.zeros(len(run_ends)))
            starts.append(arrays.send_time[run_ends])
        else:
            _, first_rows = np.unique(arrays.message_id, return_index=True)
            first_rows = np.sort(first_rows[first_rows >= first_end])
            if len(first_rows) == 0:
                continue
            records = [mct_lookup[(arrays.sim_id, int(arrays.message_id[i]))] for i in first_rows]
            run_index.append(np.full(len(first_rows), src_i, dtype=np.int64))
            ends.append(first_rows.astype(np.int64))
            targets.append(np.log(np.array([m.mct for m in records], dtype=np.float64)))
            sizes.append(np.array([m.message_size for m in records], dtype=np.float64))
            starts.append(np.array([m.start_time for m in records], dtype=np.float64))

    def _cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    windows = WindowSet(
        task,
        window_length,
        schema,
        normalizer,
        sources,
        _cat(run_index, np.int64),
        _cat(ends, np.int64),
        _cat(targets, np.float64),
        _cat(sizes, np.float64),
        _cat(starts, np.float64),
        label,
    )
    logger.info(
        f"{task.value} windows{' (' + label + ')' if label else ''}: {len(windows)} "
        f"of length {window_length} from {len(sources)} runs"
    )
    return windows


def audit_leakage(train: WindowSet, test: WindowSet) -> None:
    """
    Raises:
        DataError: a simulation run feeds both train and test windows.
    """
    shared = set(train.run_ids()) & set(test.run_ids())
    if shared:
        raise DataError(f"runs {sorted(shared)} appear in both train and test windows")


def baseline_history(windows: WindowSet, index: int) -> np.ndarray:
    """History the naive baselines see for window `index`."""
    if windows.task is Task.MCT:
        return windows.mct_history(index)
    src = windows.sources[windows.run_index[index]]
    end = windows.end[index]
    return src.delay[end - windows.window_length + 1 : end].copy()
