"""Run orchestration: one thread per rank on a shared transport."""

from __future__ import annotations

import logging
import threading
from typing import IO, Optional

from .base import BaseStation, RunSummary
from .clock import make_clock
from .config import SimConfig, derive_node_seed
from .crypto import self_check
from .errors import SimulationError, TransportClosed
from .node import SensorNode
from .topology import validate_layout
from .transport import make_transport

log = logging.getLogger(__name__)


class Simulation:
    """A configured run. ``run()`` returns the base station's summary.

    The actors stay reachable afterwards (``base``, ``nodes``) so tests and
    scripts can inspect per-node counters.
    """

    def __init__(self, config: SimConfig, command_stream: Optional[IO[str]] = None):
        self.config = config
        self.command_stream = command_stream
        self.base: Optional[BaseStation] = None
        self.nodes: list[SensorNode] = []
        self.undelivered = []

    def run(self) -> RunSummary:
        cfg = self.config
        grid = cfg.grid
        validate_layout(grid, grid.process_count)
        self_check(cfg.cipher, cfg.packsize)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        cfg.write(cfg.out_dir / "config.txt")

        transport = make_transport(cfg.transport, grid.process_count, cfg.packsize)
        root_clock = make_clock(cfg.clock)
        self.base = BaseStation(cfg, transport, root_clock.fork(), self.command_stream)
        self.nodes = [
            SensorNode(rank, cfg, transport, root_clock.fork(), derive_node_seed(cfg.seed, rank))
            for rank in grid.sensor_ranks()
        ]
        failures: list[tuple[str, BaseException]] = []
        closed: list[str] = []
        result: dict[str, RunSummary] = {}

        def guarded(name, fn):
            try:
                out = fn()
                if out is not None:
                    result[name] = out
            except TransportClosed:
                closed.append(name)
            except BaseException as exc:  # noqa: BLE001 - re-raised below
                log.exception("actor %s failed", name)
                failures.append((name, exc))
                transport.close()

        threads = [threading.Thread(target=guarded, args=("base", self.base.run), name="base")]
        threads += [
            threading.Thread(target=guarded, args=(f"node-{n.rank}", n.run), name=f"node-{n.rank}")
            for n in self.nodes
        ]
        try:
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        finally:
            transport.close()
            self.undelivered = transport.drain()
        if failures:
            name, exc = failures[0]
            raise SimulationError(f"run aborted: actor {name} failed: {exc!r}") from exc
        if "base" not in result:
            raise SimulationError(f"run aborted: transport closed under {', '.join(closed)}")
        if self.undelivered:
            log.info("%d frames were in flight at shutdown", len(self.undelivered))
        return result["base"]


def run(config: SimConfig, command_stream: Optional[IO[str]] = None) -> RunSummary:
    return Simulation(config, command_stream).run()
