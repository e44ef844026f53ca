"""
Window-based AIMD model used for TCP cross-traffic.

Slow start adds one packet per ACK until ssthresh, congestion avoidance adds
1/cwnd per ACK. A loss halves the window (floor 2); a timeout restarts slow
start from one packet.
"""

from dataclasses import dataclass, replace
from enum import Enum

RTT_GAIN = 1.0 / 8.0
RTO_MULTIPLIER = 4.0


class TcpPhase(Enum):
    SLOW_START = "slow_start"
    AVOIDANCE = "avoidance"


class TcpEvent(Enum):
    ACK = "ack"
    LOSS = "loss"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TcpFlowState:
    cwnd: float = 1.0
    ssthresh: float = 64.0
    in_flight: int = 0
    phase: TcpPhase = TcpPhase.SLOW_START
    rtt_estimate: float = 0.1

    def __post_init__(self):
        if self.cwnd < 1:
            raise ValueError(f"cwnd must be >= 1, got {self.cwnd}")
        if self.in_flight < 0:
            raise ValueError(f"in_flight must be >= 0, got {self.in_flight}")

    @property
    def window(self) -> int:
        """Whole packets the sender may keep in flight."""
        return int(self.cwnd)


def step_tcp_flow(state: TcpFlowState, event: TcpEvent) -> TcpFlowState:
    """Apply one congestion-control event and return the new state."""
    if event is TcpEvent.ACK:
        if state.phase is TcpPhase.SLOW_START:
            cwnd = state.cwnd + 1.0
            phase = TcpPhase.AVOIDANCE if cwnd >= state.ssthresh else TcpPhase.SLOW_START
            return replace(state, cwnd=cwnd, phase=phase)
        return replace(state, cwnd=state.cwnd + 1.0 / state.cwnd)

    ssthresh = max(state.cwnd / 2.0, 2.0)
    if event is TcpEvent.LOSS:
        return replace(state, ssthresh=ssthresh, cwnd=ssthresh, phase=TcpPhase.AVOIDANCE)
    return replace(state, ssthresh=ssthresh, cwnd=1.0, phase=TcpPhase.SLOW_START)


def observe_rtt(state: TcpFlowState, sample: float) -> TcpFlowState:
    """Fold one RTT sample into the smoothed estimate."""
    return replace(state, rtt_estimate=state.rtt_estimate + RTT_GAIN * (sample - state.rtt_estimate))


def retransmission_timeout(state: TcpFlowState) -> float:
    return RTO_MULTIPLIER * state.rtt_estimate
