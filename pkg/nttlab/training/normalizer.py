"""
Feature and target normalisation statistics.

Fitted once on the pre-training train split and frozen afterwards; the
fitted values travel inside every checkpoint's metadata.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from ..core.errors import EmptyDatasetError
from ..core.trace import TraceDataset, derive_mct_records

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-9


def _mean_std(values: np.ndarray):
    mean = float(values.mean())
    std = float(values.std())
    return mean, max(std, STD_FLOOR)


@dataclass(frozen=True)
class Normalizer:
    dt_mean: float = 0.0
    dt_std: float = 1.0
    size_mean: float = 0.0
    size_std: float = 1.0
    delay_mean: float = 0.0
    delay_std: float = 1.0
    log_size_mean: float = 0.0
    log_size_std: float = 1.0
    log_mct_mean: float = 0.0
    log_mct_std: float = 1.0
    window_length: int = 1024

    def __post_init__(self):
        for name in ("dt_std", "size_std", "delay_std", "log_size_std", "log_mct_std"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def identity(cls) -> "Normalizer":
        return cls()

    @property
    def log_size_scale(self):
        return (self.log_size_mean, self.log_size_std)

    def normalize_delay(self, delay):
        return (np.asarray(delay, dtype=np.float64) - self.delay_mean) / self.delay_std

    def denormalize_delay(self, z):
        return np.asarray(z, dtype=np.float64) * self.delay_std + self.delay_mean

    def normalize_log_mct(self, log_mct):
        return (np.asarray(log_mct, dtype=np.float64) - self.log_mct_mean) / self.log_mct_std

    def denormalize_log_mct(self, z):
        return np.asarray(z, dtype=np.float64) * self.log_mct_std + self.log_mct_mean

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "Normalizer":
        return cls(**{k: (int(v) if k == "window_length" else float(v)) for k, v in data.items()})


def _dt_values(dataset: TraceDataset, window_length: int) -> np.ndarray:
    """Offsets to the newest packet over non-overlapping windows of each run."""
    chunks = []
    for arrays in dataset.all_run_arrays():
        t = arrays.send_time
        n = len(t)
        if n == 0:
            continue
        if n < window_length:
            chunks.append(t - t[-1])
            continue
        usable = (n // window_length) * window_length
        blocks = t[:usable].reshape(-1, window_length)
        chunks.append((blocks - blocks[:, -1:]).reshape(-1))
    return np.concatenate(chunks)


def fit_normalizer(train: TraceDataset, window_length: int = 1024) -> Normalizer:
    """Population mean/std of every normalised quantity over the train split.

    Raises:
        EmptyDatasetError: no records.
    """
    if not train.records:
        raise EmptyDatasetError("cannot fit a normalizer on an empty dataset")
    runs = train.all_run_arrays()
    size = np.concatenate([r.size for r in runs])
    delay = np.concatenate([r.delay for r in runs])
    dt_mean, dt_std = _mean_std(_dt_values(train, window_length))
    size_mean, size_std = _mean_std(size)
    delay_mean, delay_std = _mean_std(delay)

    mct = derive_mct_records(train)
    log_size = np.log(np.array([m.message_size for m in mct], dtype=np.float64))
    mct_values = np.array([m.mct for m in mct], dtype=np.float64)
    log_size_mean, log_size_std = _mean_std(log_size)
    if np.all(mct_values > 0):
        log_mct_mean, log_mct_std = _mean_std(np.log(mct_values))
    else:
        log_mct_mean, log_mct_std = 0.0, 1.0

    normalizer = Normalizer(
        dt_mean=dt_mean,
        dt_std=dt_std,
        size_mean=size_mean,
        size_std=size_std,
        delay_mean=delay_mean,
        delay_std=delay_std,
        log_size_mean=log_size_mean,
        log_size_std=log_size_std,
        log_mct_mean=log_mct_mean,
        log_mct_std=log_mct_std,
        window_length=window_length,
    )
    logger.info(
        f"normalizer fitted on {len(delay)} packets: delay {delay_mean:.6f}±{delay_std:.6f}s, "
        f"ln mct {log_mct_mean:.3f}±{log_mct_std:.3f}"
    )
    if math.isclose(delay_std, STD_FLOOR):
        logger.warning("delay variance is zero on the train split; std floored")
    return normalizer
