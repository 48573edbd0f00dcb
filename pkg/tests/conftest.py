import socket
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridwsn import CipherConfig, SchedulingMode, SimConfig


def free_port_block(count: int) -> int:
    """First port of ``count`` consecutive bindable loopback ports."""
    for start in range(42000, 60000, count + 7):
        socks = []
        try:
            for p in range(start, start + count):
                s = socket.socket()
                s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                s.bind(("127.0.0.1", p))
                socks.append(s)
            return start
        except OSError:
            continue
        finally:
            for s in socks:
                s.close()
    raise RuntimeError("no free port block")


@pytest.fixture
def fast_config(tmp_path):
    """Small, quick virtual-clock configuration (cheap cipher workload)."""
    return SimConfig(width=3, height=3, iterations=10, interval=1.0, seed=5,
                     clock="virtual", sched=SchedulingMode.serial(),
                     cipher=CipherConfig(rounds=4), out_dir=tmp_path / "run")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
