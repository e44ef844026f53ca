"""
Discrete-event packet simulator.

Every link is a drop-tail FIFO in front of a serialiser. A packet crossing a
link waits for the serialiser, is transmitted at the link bandwidth and
propagates for prop_delay; one event is scheduled per hop so that arrivals at
each queue are processed in time order. Ties between events are broken by a
monotonically increasing sequence number.

Only workload-sender packets are emitted. Cross-traffic TCP packets occupy
queues and bandwidth but never appear in the trace.
"""

import heapq
import logging
import math
from collections import defaultdict, deque
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..__version__ import GENERATOR_VERSION
from ..core.errors import ConfigError, SimulationInvariantError
from ..core.trace import PacketRecord, TraceDataset, TraceMeta
from ..utils.integrity import config_hash
from ..utils.seeding import SIMULATE, substream
from .specs import CrossTrafficSpec, LinkSpec, SimConfig
from .tcp import TcpEvent, TcpFlowState, observe_rtt, retransmission_timeout, step_tcp_flow
from .workload import message_rate, packetize, sample_message_size

logger = logging.getLogger(__name__)

# Cross-traffic sender ids live far away from workload sender ids.
CROSS_SENDER_BASE = 1_000_000

CROSS_ACCESS_PROP_DELAY = 0.0001
CROSS_ACCESS_QUEUE = 10_000

# Event kinds
_HOP = 0
_MESSAGE = 1
_TCP_START = 2
_TCP_ACK = 3
_TCP_LOSS = 4
_TCP_TIMEOUT = 5


@dataclass
class RunCounters:
    """Per-run packet accounting (workload and cross-traffic separately)."""

    sim_id: int
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    messages: int = 0
    cross_sent: int = 0
    cross_delivered: int = 0
    cross_dropped: int = 0
    events: int = 0
    max_queue_occupancy: Dict[str, int] = field(default_factory=dict)

    def check_conservation(self) -> None:
        if self.sent != self.delivered + self.dropped:
            raise SimulationInvariantError(
                f"run {self.sim_id}: sent {self.sent} != delivered {self.delivered} + dropped {self.dropped}"
            )
        if self.cross_sent != self.cross_delivered + self.cross_dropped:
            raise SimulationInvariantError(
                f"run {self.sim_id}: cross-traffic packets not conserved"
            )


class _Link:
    """Drop-tail FIFO + serialiser.

    `waiting` holds the transmission start times of queued packets that have
    not started yet; its length is the queue occupancy.
    """

    __slots__ = ("spec", "name", "busy_until", "waiting", "max_occupancy", "last_start", "bits_per_sec")

    def __init__(self, spec: LinkSpec):
        self.spec = spec
        self.name = f"{spec.from_node}->{spec.to_node}"
        self.busy_until = 0.0
        self.waiting: deque = deque()
        self.max_occupancy = 0
        self.last_start = -math.inf
        self.bits_per_sec = spec.bandwidth

    def offer(self, now: float, size: int) -> Optional[float]:
        """Enqueue a packet arriving at `now`; return its arrival time at the
        far end, or None when the queue is full (drop)."""
        waiting = self.waiting
        while waiting and waiting[0] <= now:
            waiting.popleft()
        start = self.busy_until if self.busy_until > now else now
        if start > now:
            if len(waiting) >= self.spec.queue_capacity:
                return None
            waiting.append(start)
            occupancy = len(waiting)
            if occupancy > self.max_occupancy:
                if occupancy > self.spec.queue_capacity:
                    raise SimulationInvariantError(f"{self.name}: queue occupancy {occupancy} over capacity")
                self.max_occupancy = occupancy
        if start < self.last_start:
            raise SimulationInvariantError(f"{self.name}: FIFO order violated")
        self.last_start = start
        self.busy_until = start + size * 8.0 / self.bits_per_sec
        return self.busy_until + self.spec.prop_delay


class _Packet:
    __slots__ = ("seq", "route", "hop", "send_time", "size", "message_id", "sender", "receiver", "flow")

    def __init__(self, seq, route, send_time, size, message_id, sender, receiver, flow):
        self.seq = seq
        self.route = route
        self.hop = 0
        self.send_time = send_time
        self.size = size
        self.message_id = message_id
        self.sender = sender
        self.receiver = receiver
        self.flow = flow


class _TcpFlow:
    __slots__ = (
        "index",
        "sender_id",
        "route",
        "reverse_delay",
        "mss",
        "state",
        "cut_time",
        "timer_gen",
        "next_seq",
    )

    def __init__(self, index: int, route: Tuple[int, ...], reverse_delay: float, mss: int):
        self.index = index
        self.sender_id = CROSS_SENDER_BASE + index
        self.route = route
        self.reverse_delay = reverse_delay
        self.mss = mss
        self.state = TcpFlowState(rtt_estimate=max(2.0 * reverse_delay, 0.01))
        self.cut_time = -math.inf
        self.timer_gen = 0
        self.next_seq = 0


def compute_routes(links: List[LinkSpec]) -> Dict[str, List[Tuple[str, int]]]:
    """Adjacency list: node -> [(neighbour, link index)] in config order."""
    adjacency: Dict[str, List[Tuple[str, int]]] = defaultdict(list)
    for i, link in enumerate(links):
        adjacency[link.from_node].append((link.to_node, i))
    return adjacency


def find_route(adjacency: Dict[str, List[Tuple[str, int]]], src: str, dst: str) -> Tuple[int, ...]:
    """Fewest-hop path from src to dst as a tuple of link indices (BFS, ties by
    config order).

    Raises:
        ConfigError: dst unreachable from src.
    """
    if src == dst:
        raise ConfigError(f"route from {src} to itself")
    parent: Dict[str, Tuple[str, int]] = {}
    frontier = deque([src])
    seen = {src}
    while frontier:
        node = frontier.popleft()
        for nxt, idx in adjacency.get(node, []):
            if nxt in seen:
                continue
            seen.add(nxt)
            parent[nxt] = (node, idx)
            if nxt == dst:
                path: List[int] = []
                cur = dst
                while cur != src:
                    prev, link_idx = parent[cur]
                    path.append(link_idx)
                    cur = prev
                return tuple(reversed(path))
            frontier.append(nxt)
    raise ConfigError(f"receiver {dst} unreachable from {src}")


def _cross_access_links(config: SimConfig) -> List[Tuple[CrossTrafficSpec, int, LinkSpec]]:
    """One access link per cross-traffic flow, capped at its share of the aggregate."""
    out = []
    for c_idx, cross in enumerate(config.cross_traffic):
        if cross.n_flows == 0 or cross.aggregate_target == 0:
            continue
        for j in range(cross.n_flows):
            node = f"x{c_idx}.{j}"
            out.append(
                (
                    cross,
                    j,
                    LinkSpec(
                        from_node=node,
                        to_node=cross.entry_node,
                        bandwidth=cross.per_flow_rate,
                        prop_delay=CROSS_ACCESS_PROP_DELAY,
                        queue_capacity=CROSS_ACCESS_QUEUE,
                    ),
                )
            )
    return out


def check_topology(config: SimConfig) -> None:
    """Resolve every route once so misconfigurations fail before simulating."""
    _Topology(config)


class _Topology:
    """Links (configured + cross access) and the resolved routes."""

    def __init__(self, config: SimConfig):
        access = _cross_access_links(config)
        self.link_specs: List[LinkSpec] = list(config.links) + [spec for _, _, spec in access]
        adjacency = compute_routes(self.link_specs)
        w = config.workload
        self.workload_routes: Dict[Tuple[int, int], Tuple[int, ...]] = {}
        for s in range(w.n_senders):
            for r_idx, receiver in enumerate(w.receivers):
                self.workload_routes[(s, r_idx)] = find_route(adjacency, w.sender_node(s), receiver)
        self.cross_routes: List[Tuple[Tuple[int, ...], float, int]] = []
        for cross, j, spec in access:
            route = find_route(adjacency, spec.from_node, cross.exit_node)
            reverse = sum(self.link_specs[i].prop_delay for i in route)
            self.cross_routes.append((route, reverse, cross.mss))


def simulate_run(config: SimConfig, run_index: int) -> Tuple[List[PacketRecord], RunCounters]:
    """Simulate one run; returns its delivered workload records (send order)."""
    topo = _Topology(config)
    links = [_Link(spec) for spec in topo.link_specs]
    w = config.workload
    counters = RunCounters(sim_id=run_index)

    heap: list = []
    seq_counter = 0

    def schedule(t: float, kind: int, payload) -> None:
        nonlocal seq_counter
        heapq.heappush(heap, (t, seq_counter, kind, payload))
        seq_counter += 1

    # (packet_seq, message_id, sender, receiver, send_time, size, delay, message_size)
    delivered: List[tuple] = []
    message_sizes: Dict[int, int] = {}
    packet_seq = 0

    sender_rngs = [substream(config.seed, SIMULATE, run_index, s) for s in range(w.n_senders)]
    rate = message_rate(w.per_sender_rate, w.size_dist)
    for s, rng in enumerate(sender_rngs):
        start = rng.uniform(0.0, w.start_jitter) if w.start_jitter > 0 else 0.0
        schedule(start + rng.exponential(1.0 / rate), _MESSAGE, s)

    flows = [
        _TcpFlow(i, route, reverse, mss) for i, (route, reverse, mss) in enumerate(topo.cross_routes)
    ]
    flow_rng = substream(config.seed, SIMULATE, run_index, w.n_senders)
    for flow in flows:
        schedule(flow_rng.uniform(0.0, max(w.start_jitter, 1e-3)), _TCP_START, flow.index)

    def forward(pkt: _Packet, now: float) -> None:
        """Offer `pkt` to its current hop's link at time `now`."""
        link = links[pkt.route[pkt.hop]]
        arrival = link.offer(now, pkt.size)
        if arrival is None:
            if pkt.flow is None:
                counters.dropped += 1
            else:
                counters.cross_dropped += 1
                flow = flows[pkt.flow]
                schedule(now + flow.reverse_delay, _TCP_LOSS, (pkt.flow, pkt.send_time))
            return
        pkt.hop += 1
        if pkt.hop < len(pkt.route):
            schedule(arrival, _HOP, pkt)
            return
        if pkt.flow is None:
            counters.delivered += 1
            delivered.append(
                (
                    pkt.seq,
                    pkt.message_id,
                    pkt.sender,
                    pkt.receiver,
                    pkt.send_time,
                    pkt.size,
                    arrival - pkt.send_time,
                )
            )
        else:
            counters.cross_delivered += 1
            flow = flows[pkt.flow]
            schedule(arrival + flow.reverse_delay, _TCP_ACK, (pkt.flow, pkt.send_time))

    def arm_timer(flow: _TcpFlow, now: float) -> None:
        flow.timer_gen += 1
        if flow.state.in_flight > 0:
            schedule(now + retransmission_timeout(flow.state), _TCP_TIMEOUT, (flow.index, flow.timer_gen))

    def tcp_send(flow: _TcpFlow, now: float) -> None:
        if now >= config.duration:
            return
        while flow.state.in_flight < flow.state.window:
            pkt = _Packet(flow.next_seq, flow.route, now, flow.mss, -1, flow.sender_id, -1, flow.index)
            flow.next_seq += 1
            flow.state = replace(flow.state, in_flight=flow.state.in_flight + 1)
            counters.cross_sent += 1
            forward(pkt, now)

    def tcp_release(flow: _TcpFlow) -> None:
        flow.state = replace(flow.state, in_flight=max(0, flow.state.in_flight - 1))

    message_id = 0
    while heap:
        now, _, kind, payload = heapq.heappop(heap)
        counters.events += 1

        if kind == _HOP:
            forward(payload, now)

        elif kind == _MESSAGE:
            s = payload
            if now >= config.duration:
                continue
            rng = sender_rngs[s]
            size = sample_message_size(w.size_dist, rng)
            receiver = int(rng.integers(len(w.receivers))) if len(w.receivers) > 1 else 0
            route = topo.workload_routes[(s, receiver)]
            message_sizes[message_id] = size
            counters.messages += 1
            for pkt_size in packetize(size, w.mss):
                pkt = _Packet(packet_seq, route, now, pkt_size, message_id, s, receiver, None)
                packet_seq += 1
                counters.sent += 1
                forward(pkt, now)
            message_id += 1
            schedule(now + rng.exponential(1.0 / rate), _MESSAGE, s)

        elif kind == _TCP_START:
            flow = flows[payload]
            tcp_send(flow, now)
            arm_timer(flow, now)

        elif kind == _TCP_ACK:
            flow_idx, sent_at = payload
            flow = flows[flow_idx]
            tcp_release(flow)
            flow.state = observe_rtt(step_tcp_flow(flow.state, TcpEvent.ACK), now - sent_at)
            tcp_send(flow, now)
            arm_timer(flow, now)

        elif kind == _TCP_LOSS:
            flow_idx, sent_at = payload
            flow = flows[flow_idx]
            tcp_release(flow)
            # One window reduction per loss episode.
            if sent_at > flow.cut_time:
                flow.state = step_tcp_flow(flow.state, TcpEvent.LOSS)
                flow.cut_time = now
            tcp_send(flow, now)
            arm_timer(flow, now)

        elif kind == _TCP_TIMEOUT:
            flow_idx, gen = payload
            flow = flows[flow_idx]
            if gen != flow.timer_gen or flow.state.in_flight == 0:
                continue
            flow.state = replace(step_tcp_flow(flow.state, TcpEvent.TIMEOUT), in_flight=0)
            flow.cut_time = now
            tcp_send(flow, now)
            arm_timer(flow, now)

    counters.check_conservation()
    counters.max_queue_occupancy = {link.name: link.max_occupancy for link in links}
    records = _to_records(run_index, delivered, message_sizes)
    logger.debug(
        f"run {run_index}: {counters.events} events, sent={counters.sent} "
        f"delivered={counters.delivered} dropped={counters.dropped}"
    )
    return records, counters


def _to_records(run_index: int, delivered: List[tuple], message_sizes: Dict[int, int]) -> List[PacketRecord]:
    """Sort by send order and flag the last delivered packet of each message."""
    delivered.sort(key=lambda row: row[0])
    last_seq: Dict[int, int] = {}
    for row in delivered:
        last_seq[row[1]] = row[0]
    records = []
    for seq, message_id, sender, receiver, send_time, size, delay in delivered:
        records.append(
            PacketRecord(
                sim_id=run_index,
                packet_seq=seq,
                message_id=message_id,
                sender_id=sender,
                receiver_id=receiver,
                send_time=round(send_time, 9),
                size=size,
                delay=round(delay, 9),
                message_size=message_sizes[message_id],
                is_last_in_message=last_seq[message_id] == seq,
            )
        )
    return records


def _simulate_run_job(args: Tuple[Dict, int]) -> Tuple[List[PacketRecord], Dict]:
    """Process-pool entry point (top-level so it pickles)."""
    from .specs import sim_config_from_json

    doc, run_index = args
    records, counters = simulate_run(sim_config_from_json(doc), run_index)
    return records, asdict(counters)


def run_simulation(config: SimConfig, workers: int = 1) -> TraceDataset:
    """Simulate every run of `config` and merge them in run-index order.

    Raises:
        ConfigError: unreachable receiver or bad cross-traffic path.
    """
    check_topology(config)
    doc = config.to_dict()
    jobs = [(doc, i) for i in range(config.n_runs)]

    if workers > 1 and config.n_runs > 1:
        from ..core.run_pool import RunPool

        results = RunPool(max_workers=workers).map_ordered(_simulate_run_job, jobs)
    else:
        results = [_simulate_run_job(job) for job in jobs]

    records: List[PacketRecord] = []
    runs: List[Dict] = []
    for run_records, counters in results:
        records.extend(run_records)
        runs.append(counters)
        logger.info(
            f"{config.scenario.value} run {counters['sim_id']}: delivered={counters['delivered']} "
            f"dropped={counters['dropped']} cross_sent={counters['cross_sent']}"
        )

    meta = TraceMeta(
        scenario=config.scenario.value,
        seed=config.seed,
        generator_version=GENERATOR_VERSION,
        extra={"config_hash": config_hash(doc), "runs": runs},
    )
    return TraceDataset(records=records, meta=meta)


def delivered_fraction(counters: Dict) -> float:
    return counters["delivered"] / counters["sent"] if counters["sent"] else float("nan")


def uncongested_delay(config: SimConfig, sender: int, receiver: int, size: int) -> float:
    """Lower bound on a packet's delay: serialisation + propagation on an idle path."""
    topo = _Topology(config)
    route = topo.workload_routes[(sender, receiver)]
    return float(
        np.sum([size * 8.0 / topo.link_specs[i].bandwidth + topo.link_specs[i].prop_delay for i in route])
    )
