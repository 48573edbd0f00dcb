import csv

import pytest

from gridwsn.crypto import SchedulingMode
from gridwsn.errors import ConfigurationError, SimulationError
from gridwsn.node import SensorNode
from gridwsn.sim import Simulation, run
from gridwsn.topology import directed_edge_count
from gridwsn.wire import MessageKind

from oracle import expected_events, grid_values


def check_identities(summary, cfg):
    n = cfg.width * cfg.height
    assert summary.total_base_messages == summary.total_events + n
    assert summary.total_network_messages == (
        summary.total_node_to_node_messages + summary.total_events + n)
    assert summary.total_activations == sum(
        int(r["match_count"]) for r in read_events(cfg.out_dir / "events.csv"))
    assert sum(summary.activations.values()) == summary.total_events


def read_events(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("w,h,seed", [(3, 3, 1), (4, 5, 2), (6, 2, 3), (2, 2, 4)])
def test_identities_and_replay(fast_config, w, h, seed):
    cfg = fast_config.replace(width=w, height=h, seed=seed, iterations=25, max_random=4)
    summary = run(cfg)
    check_identities(summary, cfg)
    assert summary.total_node_to_node_messages == 25 * directed_edge_count(cfg.grid)

    got = {(int(r["iteration"]), int(r["activated_rank"]),
            tuple(int(r[f"matched_{s}"]) for s in ("left", "right", "top", "bottom")))
           for r in read_events(cfg.out_dir / "events.csv")}
    assert got == expected_events(grid_values(w, h, 25, 4, seed))
    assert summary.total_events == len(got)


def test_log_record_counts(fast_config):
    cfg = fast_config.replace(max_random=3)
    summary = run(cfg)
    text = (cfg.out_dir / "base_station.log").read_text()
    assert text.count("Iteration : ") == summary.total_events
    terminations = sum(
        (cfg.out_dir / f"node_{r}.log").read_text().count("TERMINATE -> 0")
        for r in cfg.grid.sensor_ranks())
    assert terminations == 9


def test_iterations_zero(fast_config):
    summary = run(fast_config.replace(iterations=0))
    assert (summary.total_events, summary.total_node_to_node_messages,
            summary.total_base_messages) == (0, 0, 9)


def test_no_events_with_huge_alphabet(fast_config):
    cfg = fast_config.replace(max_random=2**31)
    summary = run(cfg)
    assert summary.total_events == 0
    assert summary.total_base_messages == 9
    assert len(read_events(cfg.out_dir / "events.csv")) == 0


def test_virtual_determinism(fast_config, tmp_path):
    a = fast_config.replace(out_dir=tmp_path / "a", max_random=3)
    b = fast_config.replace(out_dir=tmp_path / "b", max_random=3)
    run(a)
    run(b)
    for name in ("events.csv", "summary.csv", "base_station.log"):
        assert (a.out_dir / name).read_bytes() == (b.out_dir / name).read_bytes(), name


def test_mode_does_not_change_events(fast_config, tmp_path):
    a = fast_config.replace(out_dir=tmp_path / "a", max_random=3)
    b = a.replace(out_dir=tmp_path / "b", sched=SchedulingMode.dynamic(3))
    run(a)
    run(b)
    assert (a.out_dir / "events.csv").read_bytes() == (b.out_dir / "events.csv").read_bytes()


def test_real_clock_run(fast_config):
    cfg = fast_config.replace(clock="real", iterations=5, interval=0.02, max_random=3)
    sim = Simulation(cfg)
    summary = sim.run()
    check_identities(summary, cfg)
    assert summary.total_simulation_time >= 5 * 0.02
    assert summary.total_node_to_node_messages == 5 * directed_edge_count(cfg.grid)
    assert sim.undelivered == []
    for row in read_events(cfg.out_dir / "events.csv"):
        assert float(row["comm_time_s"]) >= float(row["decrypt_time_s"]) > 0


def test_node_sent_counts_match_accounting(fast_config):
    sim = Simulation(fast_config)
    sim.run()
    for node in sim.nodes:
        deg = len(node.state.neighbors.present())
        counts = node.sent_counts
        assert counts[MessageKind.INIT] == counts[MessageKind.TERMINATE] == 1
        assert counts[MessageKind.NEIGHBOR_VALUE] == 10 * deg
        assert counts[MessageKind.EVENT] == node.state.activations
        assert sum(counts.values()) == 1 + 1 + 10 * deg + node.state.activations


def test_actor_failure_aborts(fast_config, monkeypatch):
    real_step = SensorNode.step

    def faulty(self):
        if self.rank == 5 and self.state.iteration == 3:
            raise RuntimeError("sensor fault")
        return real_step(self)

    monkeypatch.setattr(SensorNode, "step", faulty)
    with pytest.raises(SimulationError, match="node-5"):
        run(fast_config)
    assert (fast_config.out_dir / "node_5.log").exists()


def test_bad_packsize_rejected_before_spawn(fast_config):
    with pytest.raises(ConfigurationError, match="packsize"):
        run(fast_config.replace(packsize=72))
