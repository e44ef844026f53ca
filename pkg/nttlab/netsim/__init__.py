"""
Packet-level discrete-event simulator producing the pre-training and
fine-tuning traces.

- specs: LinkSpec / WorkloadSpec / CrossTrafficSpec / SimConfig and JSON codec
- workload: truncated log-normal message sizes, packetization
- tcp: AIMD state machine for cross-traffic flows
- engine: event loop, drop-tail links, run_simulation
- scenarios: PRETRAIN / CASE1 / CASE2 at PAPER or DESK scale
- stats: trace summary with nearest-rank percentiles
"""

from .engine import RunCounters, run_simulation, simulate_run
from .scenarios import build_scenario
from .specs import (
    CrossTrafficSpec,
    LinkSpec,
    Scale,
    ScenarioKind,
    SimConfig,
    SizeDistribution,
    SizeKind,
    WorkloadSpec,
    sim_config_from_json,
    sim_config_to_json,
)
from .stats import TraceStats, trace_stats
from .tcp import TcpEvent, TcpFlowState, TcpPhase, step_tcp_flow
from .workload import analytic_mean, sample_message_size, sample_message_sizes

__all__ = [
    "CrossTrafficSpec",
    "LinkSpec",
    "RunCounters",
    "Scale",
    "ScenarioKind",
    "SimConfig",
    "SizeDistribution",
    "SizeKind",
    "TcpEvent",
    "TcpFlowState",
    "TcpPhase",
    "TraceStats",
    "WorkloadSpec",
    "analytic_mean",
    "build_scenario",
    "run_simulation",
    "sample_message_size",
    "sample_message_sizes",
    "sim_config_from_json",
    "sim_config_to_json",
    "simulate_run",
    "step_tcp_flow",
    "trace_stats",
]
