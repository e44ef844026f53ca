"""
Built-in dataset scenarios.

PRETRAIN: workload senders behind one drop-tail bottleneck s1 -> s2 -> r0.
CASE1:    PRETRAIN plus TCP cross-traffic sharing the bottleneck.
CASE2:    CASE1 plus three receivers behind s2 with different path delays, each
          receiver link carrying its own TCP cross-traffic aggregate.

DESK scale shrinks senders and bandwidths by the same factor, keeping the 2:1
offered-load to bottleneck ratio and the cross-traffic share.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

from .specs import (
    CrossTrafficSpec,
    LinkSpec,
    Scale,
    ScenarioKind,
    SimConfig,
    SizeDistribution,
    WorkloadSpec,
)

logger = logging.getLogger(__name__)

MBPS = 1_000_000.0

ACCESS_BANDWIDTH = 100 * MBPS
ACCESS_PROP_DELAY = 0.0001
ACCESS_QUEUE = 1_000_000  # open-loop senders inject whole messages at once
EGRESS_BANDWIDTH = 1000 * MBPS
EGRESS_PROP_DELAY = 0.0001
BOTTLENECK_PROP_DELAY = 0.005
CASE2_PROP_DELAYS = (0.002, 0.010, 0.025)
START_JITTER = 1.0
MSS = 1500


@dataclass(frozen=True)
class ScaleProfile:
    """Numbers that differ between PAPER and DESK scale."""

    n_senders: int
    per_sender_rate: float
    bottleneck_bandwidth: float
    bottleneck_queue: int
    duration: float
    n_runs: int
    cross_aggregate: float
    cross_flows: int
    receiver_bandwidth: float
    receiver_queue: int


PROFILES = {
    Scale.PAPER: ScaleProfile(
        n_senders=60,
        per_sender_rate=1 * MBPS,
        bottleneck_bandwidth=30 * MBPS,
        bottleneck_queue=1000,
        duration=60.0,
        n_runs=10,
        cross_aggregate=20 * MBPS,
        cross_flows=4,
        receiver_bandwidth=30 * MBPS,
        receiver_queue=500,
    ),
    Scale.DESK: ScaleProfile(
        n_senders=10,
        per_sender_rate=1 * MBPS,
        bottleneck_bandwidth=5 * MBPS,
        bottleneck_queue=200,
        duration=30.0,
        n_runs=6,
        cross_aggregate=20 * MBPS / 6,
        cross_flows=2,
        receiver_bandwidth=5 * MBPS,
        receiver_queue=100,
    ),
}


def _sender_links(profile: ScaleProfile) -> Tuple[List[str], List[LinkSpec]]:
    nodes = [f"h{i}" for i in range(profile.n_senders)]
    links = [
        LinkSpec(node, "s1", ACCESS_BANDWIDTH, ACCESS_PROP_DELAY, ACCESS_QUEUE) for node in nodes
    ]
    return nodes, links


def build_scenario(kind: ScenarioKind, scale: Scale, seed: int) -> SimConfig:
    """Scenario configuration for `kind` at `scale`; a pure function of its inputs."""
    profile = PROFILES[scale]
    senders, links = _sender_links(profile)
    links.append(
        LinkSpec(
            "s1",
            "s2",
            profile.bottleneck_bandwidth,
            BOTTLENECK_PROP_DELAY,
            profile.bottleneck_queue,
        )
    )
    cross: List[CrossTrafficSpec] = []

    if kind is ScenarioKind.CASE2:
        receivers = [f"r{i}" for i in range(len(CASE2_PROP_DELAYS))]
        for receiver, prop in zip(receivers, CASE2_PROP_DELAYS):
            links.append(
                LinkSpec("s2", receiver, profile.receiver_bandwidth, prop, profile.receiver_queue)
            )
    else:
        receivers = ["r0"]
        links.append(LinkSpec("s2", "r0", EGRESS_BANDWIDTH, EGRESS_PROP_DELAY, ACCESS_QUEUE))

    if kind in (ScenarioKind.CASE1, ScenarioKind.CASE2):
        cross.append(CrossTrafficSpec(profile.cross_flows, profile.cross_aggregate, "s1", "s2", MSS))
    if kind is ScenarioKind.CASE2:
        for receiver in receivers:
            cross.append(
                CrossTrafficSpec(profile.cross_flows, profile.cross_aggregate, "s2", receiver, MSS)
            )

    workload = WorkloadSpec(
        n_senders=profile.n_senders,
        per_sender_rate=profile.per_sender_rate,
        size_dist=SizeDistribution(),
        start_jitter=START_JITTER,
        mss=MSS,
        senders=senders,
        receivers=receivers,
    )
    config = SimConfig(
        scenario=kind,
        links=links,
        workload=workload,
        cross_traffic=cross,
        duration=profile.duration,
        n_runs=profile.n_runs,
        seed=seed,
    )
    logger.debug(f"built {kind.value}/{scale.value} scenario with {len(links)} links")
    return config
