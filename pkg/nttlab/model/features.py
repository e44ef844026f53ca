"""
Packet features and input windows.

Column order of a feature row:

    [dt, size?, receiver one-hot ..., delay?, mask_flag]

dt is the send time relative to the newest packet of the window (<= 0).
dt, size and delay are z-normalised with a fitted normalizer; the one-hot and
mask columns are left as 0/1.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Protocol, Sequence

import numpy as np

from ..core.errors import ConfigError, WindowError
from ..core.trace import PacketRecord

logger = logging.getLogger(__name__)


class FeatureScaler(Protocol):
    dt_mean: float
    dt_std: float
    size_mean: float
    size_std: float
    delay_mean: float
    delay_std: float


@dataclass(frozen=True)
class FeatureSchema:
    use_size: bool = True
    use_delay: bool = True
    n_receivers: int = 3

    def __post_init__(self):
        if self.n_receivers < 1:
            raise ConfigError("feature schema needs at least one receiver column")

    @property
    def width(self) -> int:
        return 2 + self.n_receivers + int(self.use_size) + int(self.use_delay)

    @property
    def dt_col(self) -> int:
        return 0

    @property
    def size_col(self) -> Optional[int]:
        return 1 if self.use_size else None

    @property
    def receiver_col(self) -> int:
        return 1 + int(self.use_size)

    @property
    def delay_col(self) -> Optional[int]:
        return self.receiver_col + self.n_receivers if self.use_delay else None

    @property
    def mask_col(self) -> int:
        return self.width - 1

    def to_dict(self):
        return {"use_size": self.use_size, "use_delay": self.use_delay, "n_receivers": self.n_receivers}

    @classmethod
    def from_dict(cls, data) -> "FeatureSchema":
        return cls(
            use_size=bool(data["use_size"]),
            use_delay=bool(data["use_delay"]),
            n_receivers=int(data["n_receivers"]),
        )


@dataclass(frozen=True)
class SequenceWindow:
    """One model input: features [L x F] ordered oldest -> newest."""

    features: np.ndarray
    target_delay: float
    schema: FeatureSchema
    aux: Optional[int] = None  # message size (bytes) for the MCT task
    masked: bool = False
    mask_skipped: bool = False  # mask requested on a schema without delay
    sim_id: int = -1

    @property
    def length(self) -> int:
        return int(self.features.shape[0])


def feature_rows(
    send_time: np.ndarray,
    size: np.ndarray,
    receiver_id: np.ndarray,
    delay: np.ndarray,
    newest_time: np.ndarray,
    schema: FeatureSchema,
    scaler: FeatureScaler,
) -> np.ndarray:
    """Feature matrix for rows of equal leading shape.

    `newest_time` broadcasts against `send_time` (one value per window).
    Returns shape send_time.shape + (schema.width,) with mask_flag 0.
    """
    if np.any(receiver_id >= schema.n_receivers) or np.any(receiver_id < 0):
        raise WindowError(f"receiver id outside one-hot width {schema.n_receivers}")
    out = np.zeros(send_time.shape + (schema.width,), dtype=np.float64)
    out[..., schema.dt_col] = ((send_time - newest_time) - scaler.dt_mean) / scaler.dt_std
    if schema.use_size:
        out[..., schema.size_col] = (size - scaler.size_mean) / scaler.size_std
    rc = schema.receiver_col
    one_hot = np.eye(schema.n_receivers, dtype=np.float64)[receiver_id.astype(np.int64)]
    out[..., rc : rc + schema.n_receivers] = one_hot
    if schema.use_delay:
        out[..., schema.delay_col] = (delay - scaler.delay_mean) / scaler.delay_std
    return out


def featurize_window(
    records: Sequence[PacketRecord],
    schema: FeatureSchema,
    scaler: FeatureScaler,
    window_length: int,
    aux: Optional[int] = None,
) -> SequenceWindow:
    """Build an unmasked window from `window_length` consecutive records of one run.

    Raises:
        WindowError: records span several runs or are fewer than window_length.
    """
    if len(records) < window_length:
        raise WindowError(f"window needs {window_length} records, got {len(records)}")
    rows = list(records[-window_length:])
    if len({r.sim_id for r in rows}) != 1:
        raise WindowError("window records come from more than one simulation run")
    send_time = np.array([r.send_time for r in rows], dtype=np.float64)
    newest = rows[-1]
    features = feature_rows(
        send_time,
        np.array([r.size for r in rows], dtype=np.float64),
        np.array([r.receiver_id for r in rows], dtype=np.int64),
        np.array([r.delay for r in rows], dtype=np.float64),
        np.float64(newest.send_time),
        schema,
        scaler,
    )
    return SequenceWindow(
        features=features,
        target_delay=newest.delay,
        schema=schema,
        aux=aux,
        sim_id=newest.sim_id,
    )


def mask_features(features: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Masked copy of [..., L, F]: newest delay zeroed, newest mask_flag set.

    Without a delay column there is nothing to hide and the copy is unchanged.
    """
    out = features.copy()
    if schema.use_delay:
        out[..., -1, schema.delay_col] = 0.0
        out[..., -1, schema.mask_col] = 1.0
    return out


def mask_last_delay(window: SequenceWindow) -> SequenceWindow:
    """Hide the newest packet's delay; target_delay is kept outside the features.

    On a schema without a delay column this is a no-op returning the window
    with `mask_skipped` set.
    """
    if not window.schema.use_delay:
        logger.warning("mask_last_delay on a schema without delay column; window unchanged")
        return replace(window, mask_skipped=True)
    return replace(window, features=mask_features(window.features, window.schema), masked=True)
