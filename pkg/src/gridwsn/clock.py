"""Simulation clocks.

The real clock reads a monotonic timer relative to a run-wide epoch and
really sleeps. The virtual clock is private to one actor and only moves
when told to: ``interval`` per node step and ``HOP_COST`` per frame hop.
Encryption time never advances it, so virtual runs are byte-stable.
"""

from __future__ import annotations

import time
from datetime import datetime, timedelta

HOP_COST = 0.001
VIRTUAL_EPOCH = datetime(2000, 1, 1)


def format_timestamp(moment: datetime) -> str:
    """``YYYY-MM-DD HH:MM:SS.mmm`` (always 23 characters)."""
    return moment.strftime("%Y-%m-%d %H:%M:%S.") + f"{moment.microsecond // 1000:03d}"


class RealClock:
    virtual = False

    def __init__(self, epoch: float | None = None):
        self.epoch = time.perf_counter() if epoch is None else epoch

    def now(self) -> float:
        return time.perf_counter() - self.epoch

    def wait(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)

    def hop(self) -> None:
        pass

    def timestamp(self) -> str:
        return format_timestamp(datetime.now())

    def fork(self) -> "RealClock":
        return RealClock(self.epoch)


class VirtualClock:
    virtual = True

    def __init__(self, start: float = 0.0):
        self.time = start

    def now(self) -> float:
        return self.time

    def wait(self, seconds: float) -> None:
        self.time += seconds

    def hop(self) -> None:
        self.time += HOP_COST

    def advance_to(self, t: float) -> None:
        self.time = max(self.time, t)

    def timestamp(self) -> str:
        return format_timestamp(VIRTUAL_EPOCH + timedelta(seconds=self.time))

    def fork(self) -> "VirtualClock":
        return VirtualClock()


def virtual_step_end(iterations: int, interval: float) -> float:
    """Virtual time of a node that has completed ``iterations`` steps."""
    return iterations * (HOP_COST + interval)


def make_clock(mode: str):
    if mode == "real":
        return RealClock()
    if mode == "virtual":
        return VirtualClock()
    raise ValueError(f"unknown clock mode {mode!r}")
