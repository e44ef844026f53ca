"""
Unit tests for the packet simulator: workload sampling, TCP model, engine
semantics, scenarios and trace statistics.
"""

import numpy as np
import pytest

from nttlab.core.errors import ConfigError
from nttlab.core.trace import PacketRecord, TraceDataset
from nttlab.netsim.engine import CROSS_SENDER_BASE, run_simulation, simulate_run, uncongested_delay
from nttlab.netsim.scenarios import build_scenario
from nttlab.netsim.specs import (
    CrossTrafficSpec,
    LinkSpec,
    Scale,
    ScenarioKind,
    SimConfig,
    SizeDistribution,
    WorkloadSpec,
    sim_config_from_json,
    sim_config_to_json,
)
from nttlab.netsim.stats import nearest_rank, trace_stats
from nttlab.netsim.tcp import TcpEvent, TcpFlowState, TcpPhase, step_tcp_flow
from nttlab.netsim.workload import (
    analytic_mean,
    message_rate,
    packetize,
    sample_message_size,
    sample_message_sizes,
)
from nttlab.utils.seeding import substream


def single_link_config(
    message_size: int = 1500,
    queue_capacity: int = 10,
    duration: float = 200.0,
    bandwidth: float = 30e6,
    prop_delay: float = 0.001,
) -> SimConfig:
    """One sender on one link; sparse point-size messages (about one every 10 s)."""
    workload = WorkloadSpec(
        n_senders=1,
        per_sender_rate=message_size * 8 / 10.0,
        size_dist=SizeDistribution.point(message_size),
        start_jitter=0.0,
        mss=1500,
        senders=["h0"],
        receivers=["r0"],
    )
    return SimConfig(
        scenario=ScenarioKind.PRETRAIN,
        links=[LinkSpec("h0", "r0", bandwidth, prop_delay, queue_capacity)],
        workload=workload,
        cross_traffic=[],
        duration=duration,
        n_runs=1,
        seed=3,
    )


def short_scenario(kind: ScenarioKind, duration: float = 2.0, n_runs: int = 2) -> SimConfig:
    return build_scenario(kind, Scale.DESK, seed=7).with_overrides(duration=duration, n_runs=n_runs)


class TestWorkload:
    """Message sizes and packetisation."""

    def test_point_mass_always_same_size(self):
        rng = substream(0, "test")
        dist = SizeDistribution.point(1500)
        assert {sample_message_size(dist, rng) for _ in range(50)} == {1500}

    def test_sizes_within_truncation_bounds(self):
        dist = SizeDistribution()
        sizes = sample_message_sizes(dist, substream(1, "test"), 100_000)
        assert sizes.min() >= dist.min_size
        assert sizes.max() <= dist.max_size

    def test_empirical_mean_close_to_analytic(self):
        dist = SizeDistribution()
        sizes = sample_message_sizes(dist, substream(2, "test"), 1_000_000)
        assert abs(sizes.mean() - analytic_mean(dist)) / analytic_mean(dist) < 0.10

    def test_heavy_tail(self):
        sizes = sample_message_sizes(SizeDistribution(), substream(3, "test"), 1_000_000)
        p50, p99 = np.percentile(sizes, [50, 99])
        assert p99 / p50 > 50

    def test_same_stream_same_draws(self):
        dist = SizeDistribution()
        a = [sample_message_size(dist, substream(4, "test")) for _ in range(3)]
        b = [sample_message_size(dist, substream(4, "test")) for _ in range(3)]
        assert a == b

    def test_scalar_draw_consumes_one_uniform(self):
        dist = SizeDistribution()
        rng_a, rng_b = substream(5, "test"), substream(5, "test")
        first = sample_message_size(dist, rng_a)
        second = sample_message_size(dist, rng_a)
        assert [first, second] == list(sample_message_sizes(dist, rng_b, 2))

    def test_packetize_remainder(self):
        assert packetize(3001, 1500) == [1500, 1500, 1]
        assert packetize(1500, 1500) == [1500]
        assert packetize(100, 1500) == [100]

    def test_message_rate_offers_configured_load(self):
        dist = SizeDistribution.point(1000)
        assert message_rate(8000.0, dist) == pytest.approx(1.0)

    def test_invalid_distribution(self):
        with pytest.raises(ConfigError):
            SizeDistribution(sigma=0.0)
        with pytest.raises(ConfigError):
            SizeDistribution(min_size=10, max_size=10)


class TestTcpModel:
    """AIMD state machine."""

    def test_slow_start_ack(self):
        state = step_tcp_flow(TcpFlowState(cwnd=1.0), TcpEvent.ACK)
        assert state.cwnd == 2.0
        assert state.phase is TcpPhase.SLOW_START

    def test_avoidance_ack(self):
        state = step_tcp_flow(TcpFlowState(cwnd=10.0, phase=TcpPhase.AVOIDANCE), TcpEvent.ACK)
        assert state.cwnd == pytest.approx(10.1)

    @pytest.mark.parametrize("phase", list(TcpPhase))
    def test_loss_halves_window(self, phase):
        state = step_tcp_flow(TcpFlowState(cwnd=10.0, phase=phase), TcpEvent.LOSS)
        assert (state.cwnd, state.ssthresh, state.phase) == (5.0, 5.0, TcpPhase.AVOIDANCE)

    def test_loss_floor_is_two(self):
        state = step_tcp_flow(TcpFlowState(cwnd=3.0), TcpEvent.LOSS)
        assert state.ssthresh == 2.0

    def test_timeout_restarts_slow_start(self):
        state = step_tcp_flow(TcpFlowState(cwnd=10.0, phase=TcpPhase.AVOIDANCE), TcpEvent.TIMEOUT)
        assert (state.cwnd, state.ssthresh, state.phase) == (1.0, 5.0, TcpPhase.SLOW_START)

    def test_slow_start_ends_at_ssthresh(self):
        state = TcpFlowState(cwnd=3.0, ssthresh=4.0)
        assert step_tcp_flow(state, TcpEvent.ACK).phase is TcpPhase.AVOIDANCE

    def test_invalid_state(self):
        with pytest.raises(ValueError):
            TcpFlowState(cwnd=0.5)


class TestEngine:
    """Delay arithmetic, drop-tail behaviour and trace contents."""

    def test_idle_single_packet_delay(self):
        records, _ = simulate_run(single_link_config(), 0)
        assert records
        for r in records:
            assert r.delay == pytest.approx(1500 * 8 / 30e6 + 0.001, abs=1e-9)

    def test_back_to_back_packets_differ_by_one_transmission(self):
        records, _ = simulate_run(single_link_config(message_size=3000), 0)
        assert len(records) % 2 == 0
        for first, second in zip(records[::2], records[1::2]):
            assert first.message_id == second.message_id
            assert second.delay - first.delay == pytest.approx(1500 * 8 / 30e6, abs=1e-8)
            assert second.is_last_in_message and not first.is_last_in_message

    def test_full_queue_drops(self):
        records, counters = simulate_run(single_link_config(message_size=4500, queue_capacity=1), 0)
        assert counters.messages > 0
        assert counters.dropped == counters.messages
        assert len(records) == 2 * counters.messages
        assert counters.sent == counters.delivered + counters.dropped
        assert counters.max_queue_occupancy["h0->r0"] == 1

    def test_dropped_last_packet_moves_last_flag(self):
        records, _ = simulate_run(single_link_config(message_size=4500, queue_capacity=1), 0)
        flagged = [r for r in records if r.is_last_in_message]
        assert len(flagged) == len({r.message_id for r in records})

    def test_unreachable_receiver(self):
        config = single_link_config()
        broken = SimConfig(
            scenario=config.scenario,
            links=[LinkSpec("h0", "s1", 1e6, 0.0, 10)],
            workload=config.workload,
            cross_traffic=[],
            duration=1.0,
            n_runs=1,
            seed=0,
        )
        with pytest.raises(ConfigError):
            run_simulation(broken)

    def test_deterministic(self):
        config = short_scenario(ScenarioKind.PRETRAIN)
        a = run_simulation(config)
        b = run_simulation(config)
        assert a == b
        assert a.meta.to_dict() == b.meta.to_dict()

    def test_cross_traffic_not_emitted(self):
        config = short_scenario(ScenarioKind.CASE1)
        dataset = run_simulation(config)
        assert dataset.records
        assert all(r.sender_id < config.workload.n_senders for r in dataset.records)
        assert all(r.sender_id < CROSS_SENDER_BASE for r in dataset.records)
        assert sum(run["cross_sent"] for run in dataset.meta.extra["runs"]) > 0

    def test_queue_occupancy_within_capacity(self):
        config = short_scenario(ScenarioKind.CASE1)
        dataset = run_simulation(config)
        capacities = {f"{l.from_node}->{l.to_node}": l.queue_capacity for l in config.links}
        for run in dataset.meta.extra["runs"]:
            for name, occupancy in run["max_queue_occupancy"].items():
                if name in capacities:
                    assert occupancy <= capacities[name]

    def test_delay_at_least_uncongested_bound(self):
        config = short_scenario(ScenarioKind.CASE1, n_runs=1)
        dataset = run_simulation(config)
        for r in dataset.records:
            bound = uncongested_delay(config, r.sender_id, r.receiver_id, r.size)
            assert r.delay >= bound - 1e-9

    def test_conservation_recorded_per_run(self):
        dataset = run_simulation(short_scenario(ScenarioKind.PRETRAIN))
        for run in dataset.meta.extra["runs"]:
            assert run["sent"] == run["delivered"] + run["dropped"]
            assert run["cross_sent"] == 0

    def test_meta_provenance(self):
        config = short_scenario(ScenarioKind.PRETRAIN)
        dataset = run_simulation(config)
        assert dataset.meta.scenario == "PRETRAIN"
        assert dataset.meta.seed == 7
        assert len(dataset.meta.extra["config_hash"]) == 64
        assert dataset.sim_ids() == [0, 1]


class TestScenarios:
    """Scenario construction at both scales."""

    def test_paper_pretrain(self):
        config = build_scenario(ScenarioKind.PRETRAIN, Scale.PAPER, seed=0)
        bottleneck = [l for l in config.links if (l.from_node, l.to_node) == ("s1", "s2")][0]
        assert config.workload.n_senders == 60
        assert config.workload.per_sender_rate == 1e6
        assert bottleneck.bandwidth == 30e6
        assert bottleneck.queue_capacity == 1000
        assert (config.n_runs, config.duration) == (10, 60.0)
        assert config.cross_traffic == []

    def test_paper_case1_adds_cross_traffic(self):
        pretrain = build_scenario(ScenarioKind.PRETRAIN, Scale.PAPER, seed=0)
        case1 = build_scenario(ScenarioKind.CASE1, Scale.PAPER, seed=0)
        assert case1.links == pretrain.links
        assert len(case1.cross_traffic) == 1
        assert case1.cross_traffic[0].aggregate_target == 20e6

    def test_case2_has_three_receivers_with_own_cross_traffic(self):
        config = build_scenario(ScenarioKind.CASE2, Scale.PAPER, seed=0)
        assert config.workload.receivers == ["r0", "r1", "r2"]
        exits = [c.exit_node for c in config.cross_traffic]
        assert exits == ["s2", "r0", "r1", "r2"]
        delays = sorted(l.prop_delay for l in config.links if l.from_node == "s2")
        assert delays == [0.002, 0.010, 0.025]

    def test_desk_preserves_overload_ratio(self):
        config = build_scenario(ScenarioKind.PRETRAIN, Scale.DESK, seed=0)
        bottleneck = [l for l in config.links if (l.from_node, l.to_node) == ("s1", "s2")][0]
        offered = config.workload.n_senders * config.workload.per_sender_rate
        assert offered / bottleneck.bandwidth == pytest.approx(2.0)

    def test_same_inputs_same_config(self):
        assert build_scenario(ScenarioKind.CASE2, Scale.DESK, 4) == build_scenario(
            ScenarioKind.CASE2, Scale.DESK, 4
        )

    def test_json_document_round_trip(self):
        config = build_scenario(ScenarioKind.CASE2, Scale.DESK, 4)
        assert sim_config_from_json(sim_config_to_json(config)) == config

    def test_invalid_json_document(self):
        doc = sim_config_to_json(build_scenario(ScenarioKind.PRETRAIN, Scale.DESK, 0))
        doc["duration"] = -1
        with pytest.raises(ConfigError):
            sim_config_from_json(doc)

    def test_overrides(self):
        config = build_scenario(ScenarioKind.PRETRAIN, Scale.DESK, 0).with_overrides(duration=1.5)
        assert config.duration == 1.5
        assert config.n_runs == 6

    def test_invalid_specs(self):
        with pytest.raises(ConfigError):
            LinkSpec("a", "b", 0.0, 0.0, 1)
        with pytest.raises(ConfigError):
            CrossTrafficSpec(-1, 1.0, "a", "b")


def _rec(seq: int, delay: float, sim_id: int = 0) -> PacketRecord:
    return PacketRecord(sim_id, seq, seq, 0, 0, 0.1 * seq + 0.1, 100, delay, 100, True)


class TestTraceStats:
    """Nearest-rank summaries."""

    def test_single_record(self):
        stats = trace_stats(TraceDataset(records=[_rec(0, 0.01)]))
        assert stats.delay["mean"] == 0.01
        assert all(stats.delay[f"p{p}"] == 0.01 for p in ("50", "90", "99", "99.9"))

    def test_nearest_rank_median(self):
        assert nearest_rank(np.array([1.0, 2.0, 3.0, 4.0]), "50") == 2.0
        assert nearest_rank(np.array([1.0, 2.0, 3.0, 4.0]), "99.9") == 4.0

    def test_concatenated_identical_runs(self):
        one = [_rec(i, 0.01 * (i + 1)) for i in range(5)]
        two = one + [_rec(i, 0.01 * (i + 1), sim_id=1) for i in range(5)]
        a = trace_stats(TraceDataset(records=one))
        b = trace_stats(TraceDataset(records=two))
        assert a.delay == pytest.approx(b.delay)
        assert a.mct == pytest.approx(b.mct)
        assert b.packet_count == 10 and b.n_runs == 2

    def test_sequence_gaps_count_drops(self):
        records = [_rec(0, 0.01), _rec(2, 0.01), _rec(3, 0.01)]
        stats = trace_stats(TraceDataset(records=records))
        assert stats.drop_gaps == 1
        assert stats.gap_rate == pytest.approx(0.25)

    def test_summary_line_mentions_packet_count(self):
        stats = trace_stats(TraceDataset(records=[_rec(0, 0.01)]))
        assert "packets=1" in stats.summary_line()
