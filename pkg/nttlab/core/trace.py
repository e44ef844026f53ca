"""
Packet trace data model and canonical CSV format.

A trace is the ordered list of workload-sender packets observed in one or more
simulation runs. Message completion records are derived from it; datasets are
split by whole runs so that sequence windows never straddle train and test.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from ..utils.seeding import SPLIT, substream
from .errors import (
    EmptyDatasetError,
    SplitError,
    TraceParseError,
    TraceValidationError,
    TraceWriteError,
)

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "sim_id,packet_seq,message_id,sender_id,receiver_id,"
    "send_time,size,delay,message_size,is_last_in_message"
)
_N_FIELDS = 10
_WRITE_CHUNK_ROWS = 8192


@dataclass(frozen=True)
class PacketRecord:
    """One delivered workload packet."""

    sim_id: int
    packet_seq: int
    message_id: int
    sender_id: int
    receiver_id: int
    send_time: float
    size: int
    delay: float
    message_size: int
    is_last_in_message: bool

    @property
    def delivery_time(self) -> float:
        return self.send_time + self.delay


@dataclass(frozen=True)
class MctRecord:
    """Completion record of one message (keyed by run and message id)."""

    sim_id: int
    message_id: int
    start_time: float
    completion_time: float
    mct: float
    message_size: int


@dataclass
class TraceMeta:
    """Provenance of a dataset; not part of the CSV and ignored by equality."""

    scenario: str = "unknown"
    seed: Optional[int] = None
    generator_version: str = ""
    extra: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "generator_version": self.generator_version,
            **self.extra,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "TraceMeta":
        data = dict(data)
        return cls(
            scenario=data.pop("scenario", "unknown"),
            seed=data.pop("seed", None),
            generator_version=data.pop("generator_version", ""),
            extra=data,
        )


@dataclass(frozen=True)
class RunArrays:
    """Column view (numpy) of the records of one run, in trace order."""

    sim_id: int
    packet_seq: np.ndarray
    message_id: np.ndarray
    sender_id: np.ndarray
    receiver_id: np.ndarray
    send_time: np.ndarray
    size: np.ndarray
    delay: np.ndarray
    message_size: np.ndarray
    is_last: np.ndarray

    def __len__(self) -> int:
        return int(self.send_time.shape[0])


@dataclass
class TraceDataset:
    """Ordered packet records grouped by sim_id, plus provenance."""

    records: List[PacketRecord]
    meta: TraceMeta = field(default_factory=TraceMeta, compare=False)
    _arrays: Dict[int, RunArrays] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __len__(self) -> int:
        return len(self.records)

    def packet_count(self) -> int:
        return len(self.records)

    def sim_ids(self) -> List[int]:
        """Run ids in trace order."""
        seen: List[int] = []
        for r in self.records:
            if not seen or seen[-1] != r.sim_id:
                seen.append(r.sim_id)
        return seen

    def runs(self) -> Dict[int, List[PacketRecord]]:
        grouped: Dict[int, List[PacketRecord]] = defaultdict(list)
        for r in self.records:
            grouped[r.sim_id].append(r)
        return dict(grouped)

    def select_runs(self, sim_ids: Iterable[int], label: str = "") -> "TraceDataset":
        """New dataset holding only the given runs, in sim_id order."""
        wanted = sorted(set(sim_ids))
        grouped = self.runs()
        records = [r for sid in wanted for r in grouped.get(sid, [])]
        meta = replace(self.meta, extra={**self.meta.extra})
        if label:
            meta.extra["subset"] = label
        return TraceDataset(records=records, meta=meta)

    def run_arrays(self, sim_id: int) -> RunArrays:
        """Numpy columns for one run (cached)."""
        if sim_id not in self._arrays:
            rows = [r for r in self.records if r.sim_id == sim_id]
            self._arrays[sim_id] = _to_arrays(sim_id, rows)
        return self._arrays[sim_id]

    def all_run_arrays(self) -> List[RunArrays]:
        """Numpy columns for every run, in sim_id order (single pass)."""
        missing = [sid for sid in self.sim_ids() if sid not in self._arrays]
        if missing:
            grouped = self.runs()
            for sid in missing:
                self._arrays[sid] = _to_arrays(sid, grouped[sid])
        return [self._arrays[sid] for sid in self.sim_ids()]


def _to_arrays(sim_id: int, rows: List[PacketRecord]) -> RunArrays:
    return RunArrays(
        sim_id=sim_id,
        packet_seq=np.array([r.packet_seq for r in rows], dtype=np.int64),
        message_id=np.array([r.message_id for r in rows], dtype=np.int64),
        sender_id=np.array([r.sender_id for r in rows], dtype=np.int64),
        receiver_id=np.array([r.receiver_id for r in rows], dtype=np.int64),
        send_time=np.array([r.send_time for r in rows], dtype=np.float64),
        size=np.array([r.size for r in rows], dtype=np.float64),
        delay=np.array([r.delay for r in rows], dtype=np.float64),
        message_size=np.array([r.message_size for r in rows], dtype=np.float64),
        is_last=np.array([r.is_last_in_message for r in rows], dtype=bool),
    )


def validate_dataset(dataset: TraceDataset) -> None:
    """Check every PacketRecord / TraceDataset invariant.

    Raises:
        EmptyDatasetError: no records.
        TraceValidationError: naming the violated invariant.
    """
    if not dataset.records:
        raise EmptyDatasetError()

    finished_runs = set()
    last_counts: Dict[Tuple[int, int], int] = defaultdict(int)
    prev: Optional[PacketRecord] = None
    for i, r in enumerate(dataset.records):
        if not r.delay > 0:
            raise TraceValidationError("delay > 0", f"record {i} delay={r.delay}")
        if not r.size > 0:
            raise TraceValidationError("size > 0", f"record {i} size={r.size}")
        if prev is not None and r.sim_id != prev.sim_id:
            finished_runs.add(prev.sim_id)
            if r.sim_id in finished_runs or r.sim_id < prev.sim_id:
                raise TraceValidationError(
                    "runs grouped in sim_id order", f"record {i} sim_id={r.sim_id}"
                )
        elif prev is not None:
            if r.packet_seq <= prev.packet_seq:
                raise TraceValidationError(
                    "packet_seq strictly increasing",
                    f"record {i} packet_seq={r.packet_seq} after {prev.packet_seq}",
                )
            if r.send_time < prev.send_time:
                raise TraceValidationError(
                    "records sorted by send_time",
                    f"record {i} send_time={r.send_time} after {prev.send_time}",
                )
        if r.is_last_in_message:
            last_counts[(r.sim_id, r.message_id)] += 1
        else:
            last_counts.setdefault((r.sim_id, r.message_id), 0)
        prev = r

    for (sim_id, message_id), count in last_counts.items():
        if count != 1:
            raise TraceValidationError(
                "exactly one is_last_in_message record per message",
                f"sim_id={sim_id} message_id={message_id} has {count}",
            )


def _format_row(r: PacketRecord) -> str:
    return (
        f"{r.sim_id},{r.packet_seq},{r.message_id},{r.sender_id},{r.receiver_id},"
        f"{r.send_time:.9f},{r.size},{r.delay:.9f},{r.message_size},"
        f"{1 if r.is_last_in_message else 0}\n"
    )


def write_trace(dataset: TraceDataset, destination: BinaryIO) -> int:
    """Write the canonical CSV (header first, runs in sim_id order).

    Returns:
        Number of bytes written.

    Raises:
        EmptyDatasetError: no records.
        TraceWriteError: the sink failed; carries the byte offset reached.
    """
    if not dataset.records:
        raise EmptyDatasetError()

    records = sorted(dataset.records, key=lambda r: (r.sim_id, r.packet_seq))
    offset = 0

    def emit(text: str) -> None:
        nonlocal offset
        data = text.encode("utf-8")
        try:
            destination.write(data)
        except (OSError, ValueError) as e:
            raise TraceWriteError(str(e), offset) from e
        offset += len(data)

    emit(CSV_HEADER + "\n")
    for start in range(0, len(records), _WRITE_CHUNK_ROWS):
        emit("".join(_format_row(r) for r in records[start : start + _WRITE_CHUNK_ROWS]))
    return offset


def _parse_row(line: str, line_number: int) -> PacketRecord:
    parts = line.split(",")
    if len(parts) != _N_FIELDS:
        raise TraceParseError(f"expected {_N_FIELDS} fields, got {len(parts)}", line_number)
    try:
        flag = parts[9].strip()
        if flag not in ("0", "1"):
            raise ValueError(f"is_last_in_message must be 0 or 1, got {flag!r}")
        return PacketRecord(
            sim_id=int(parts[0]),
            packet_seq=int(parts[1]),
            message_id=int(parts[2]),
            sender_id=int(parts[3]),
            receiver_id=int(parts[4]),
            send_time=float(parts[5]),
            size=int(parts[6]),
            delay=float(parts[7]),
            message_size=int(parts[8]),
            is_last_in_message=flag == "1",
        )
    except ValueError as e:
        raise TraceParseError(str(e), line_number) from e


def iter_rows(source: BinaryIO) -> Iterator[PacketRecord]:
    """Parse records lazily; the header is checked first."""
    lines = iter(source)
    try:
        header = next(lines).decode("utf-8").rstrip("\r\n")
    except StopIteration:
        header = ""
    if header != CSV_HEADER:
        raise TraceParseError("unexpected header", 1)
    for line_number, raw in enumerate(lines, start=2):
        try:
            line = raw.decode("utf-8").rstrip("\r\n")
        except UnicodeDecodeError as e:
            raise TraceParseError(f"not UTF-8: {e}", line_number) from e
        if not line:
            continue
        yield _parse_row(line, line_number)


def read_trace(source: BinaryIO) -> TraceDataset:
    """Parse a canonical CSV stream into a validated dataset."""
    dataset = TraceDataset(records=list(iter_rows(source)))
    validate_dataset(dataset)
    return dataset


def write_trace_file(dataset: TraceDataset, path: str) -> int:
    from ..utils.fsio import atomic_write

    return atomic_write(path, lambda f: write_trace(dataset, f))


def read_trace_file(path: str) -> TraceDataset:
    with open(path, "rb") as f:
        return read_trace(f)


def derive_mct_records(dataset: TraceDataset) -> List[MctRecord]:
    """One completion record per (sim_id, message_id).

    mct = delivery time of the last packet - send time of the first packet.

    Raises:
        TraceValidationError: a message has no is_last_in_message record.
    """
    first_send: Dict[Tuple[int, int], float] = {}
    first_seq: Dict[Tuple[int, int], int] = {}
    last: Dict[Tuple[int, int], PacketRecord] = {}
    for r in dataset.records:
        key = (r.sim_id, r.message_id)
        if key not in first_seq or r.packet_seq < first_seq[key]:
            first_seq[key] = r.packet_seq
            first_send[key] = r.send_time
        if r.is_last_in_message:
            last[key] = r

    out: List[MctRecord] = []
    for key, start in first_send.items():
        if key not in last:
            raise TraceValidationError(
                "every message has a last-packet record",
                f"message_id={key[1]} sim_id={key[0]}",
            )
        end = last[key].delivery_time
        out.append(
            MctRecord(
                sim_id=key[0],
                message_id=key[1],
                start_time=start,
                completion_time=end,
                mct=end - start,
                message_size=last[key].message_size,
            )
        )
    out.sort(key=lambda m: (m.sim_id, m.start_time, m.message_id))
    return out


def make_split(
    dataset: TraceDataset,
    test_fraction: float,
    subsample: Optional[float],
    seed: int,
) -> Tuple[TraceDataset, TraceDataset]:
    """Split by whole runs into (train, test), optionally subsampling train.

    Test runs are drawn by a seeded permutation; the train subsample keeps the
    prefix of train runs (sim_id order) whose packet share is closest to the
    requested fraction, never fewer than one run.

    Raises:
        SplitError: fractions out of range or too few runs.
    """
    if not 0 < test_fraction < 1:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if subsample is not None and not 0 < subsample <= 1:
        raise SplitError(f"subsample must be in (0, 1], got {subsample}")
    if not dataset.records:
        raise EmptyDatasetError()

    run_ids = dataset.sim_ids()
    n_test = max(1, int(round(len(run_ids) * test_fraction)))
    if len(run_ids) - n_test < 1:
        raise SplitError(
            f"{len(run_ids)} run(s) cannot honour test_fraction={test_fraction}; "
            "simulate more runs"
        )

    order = substream(seed, SPLIT).permutation(len(run_ids))
    test_ids = sorted(run_ids[i] for i in order[:n_test])
    train_ids = [sid for sid in run_ids if sid not in set(test_ids)]

    if subsample is not None and subsample < 1:
        sizes = {sid: 0 for sid in train_ids}
        for r in dataset.records:
            if r.sim_id in sizes:
                sizes[r.sim_id] += 1
        total = sum(sizes.values())
        best_k, best_gap = 1, float("inf")
        cumulative = 0
        for k, sid in enumerate(train_ids, start=1):
            cumulative += sizes[sid]
            gap = abs(cumulative / total - subsample)
            if gap < best_gap:
                best_k, best_gap = k, gap
        train_ids = train_ids[:best_k]

    logger.debug(f"split: train runs {train_ids}, test runs {test_ids}")
    return (
        dataset.select_runs(train_ids, label="train"),
        dataset.select_runs(test_ids, label="test"),
    )
