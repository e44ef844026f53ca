"""Builders for synthetic test data."""

import numpy as np

from nttlab.core.trace import PacketRecord, TraceDataset, TraceMeta


def build_synthetic_trace(
    n_runs: int = 4,
    n_packets: int = 160,
    seed: int = 0,
    packets_per_message: int = 3,
    n_receivers: int = 3,
) -> TraceDataset:
    """Valid trace with smooth delays: every `packets_per_message` packets form one message."""
    rng = np.random.default_rng(seed)
    records = []
    for sim_id in range(n_runs):
        t = 0.0
        sizes = rng.integers(100, 1500, size=n_packets)
        for start in range(0, n_packets, packets_per_message):
            stop = min(start + packets_per_message, n_packets)
            message_size = int(sizes[start:stop].sum())
            message_id = start // packets_per_message
            for seq in range(start, stop):
                t += float(rng.uniform(1e-4, 1e-3))
                delay = 0.01 + 0.005 * np.sin(t * 50.0) + float(sizes[seq]) * 1e-6
                records.append(
                    PacketRecord(
                        sim_id=sim_id,
                        packet_seq=seq,
                        message_id=message_id,
                        sender_id=message_id % 5,
                        receiver_id=message_id % n_receivers,
                        send_time=round(t, 9),
                        size=int(sizes[seq]),
                        delay=round(float(delay), 9),
                        message_size=message_size,
                        is_last_in_message=seq == stop - 1,
                    )
                )
    return TraceDataset(records=records, meta=TraceMeta(scenario="SYNTHETIC", seed=seed))
