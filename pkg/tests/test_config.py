import numpy as np
import pytest

from gridwsn.clock import HOP_COST, RealClock, VirtualClock, make_clock, virtual_step_end
from gridwsn.config import SimConfig, build_config, derive_node_seed, parse_config_text
from gridwsn.errors import ConfigurationError


def test_defaults_match_reference_parameters():
    c = SimConfig()
    assert (c.width, c.height, c.iterations, c.interval, c.max_random, c.packsize) == \
        (4, 5, 100, 1.0, 12, 256)
    assert c.cipher.rounds == 1000


@pytest.mark.parametrize("kw", [
    {"width": 1}, {"iterations": -2}, {"interval": -0.5}, {"max_random": 1},
    {"packsize": 64}, {"packsize": 100}, {"clock": "sundial"}, {"seed": -1}, {"seed": 2**64},
])
def test_invalid_config(kw):
    with pytest.raises(ConfigurationError):
        SimConfig(**kw)


def test_config_text_round_trip(tmp_path):
    cfg = SimConfig(width=6, height=3, iterations=-1, interval=0.25, seed=99,
                    clock="virtual", out_dir=tmp_path / "x")
    cfg.write(tmp_path / "config.txt")
    items = parse_config_text((tmp_path / "config.txt").read_text())
    assert build_config(items) == cfg


def test_parse_config_text_errors():
    assert parse_config_text("# comment\n\nwidth = 7\n") == {"width": "7"}
    with pytest.raises(ConfigurationError):
        parse_config_text("width 7")
    with pytest.raises(ConfigurationError):
        parse_config_text("colour = blue")
    with pytest.raises(ConfigurationError):
        build_config({"width": "wide"})


def test_derive_node_seed_deterministic_and_distinct():
    assert derive_node_seed(5, 3) == derive_node_seed(5, 3)
    masters = np.random.default_rng(0).integers(0, 2**63, size=10_000, dtype=np.uint64)
    for s in masters:
        s = int(s)
        assert derive_node_seed(s, 1) != derive_node_seed(s, 2)
    seeds = {derive_node_seed(0, r) for r in range(1, 1001)}
    assert len(seeds) == 1000
    assert all(0 <= x < 2**64 for x in seeds)


def test_derived_streams_uncorrelated():
    n = 20_000
    streams = np.array([np.random.default_rng(derive_node_seed(7, r)).integers(0, 12, n)
                        for r in range(1, 21)], dtype=float)
    corr = np.corrcoef(streams)
    off = corr[~np.eye(20, dtype=bool)]
    assert np.abs(off).max() < 5 / np.sqrt(n)


def test_virtual_clock():
    c = VirtualClock()
    c.hop()
    c.wait(1.0)
    assert c.now() == pytest.approx(1.0 + HOP_COST)
    c.advance_to(0.5)
    assert c.now() == pytest.approx(1.0 + HOP_COST)
    assert c.timestamp() == "2000-01-01 00:00:01.001"
    assert c.fork().now() == 0.0
    assert virtual_step_end(3, 1.0) == pytest.approx(3 * (1.0 + HOP_COST))


def test_real_clock_monotonic_and_shared_epoch():
    c = RealClock()
    child = c.fork()
    a = c.now()
    c.wait(0.01)
    assert c.now() - a >= 0.01
    assert abs(child.now() - c.now()) < 0.05
    assert isinstance(make_clock("real"), RealClock)
    assert isinstance(make_clock("virtual"), VirtualClock)
