"""Sensor-node actor.

Each step a node draws a value, sends it to every neighbour, waits for one
value from each of them, and reports an event to the base station when at
least three neighbour slots match its own value. A slot matches if the
neighbour's current value or its value from the previous iteration equals
the node's current value (a sliding window of depth two).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .crypto import Operation, TimingSample, xcrypt
from .errors import ConfigurationError, ProtocolError, TransportClosed
from .topology import BASE_RANK, NeighborSet, neighbors_of
from .transport import Envelope, Transport
from .wire import (EventPayload, InitPayload, MessageKind, NeighborValuePayload,
                   Payload, TerminatePayload, decode, encode)

log = logging.getLogger(__name__)

MIN_MATCHES = 3
NO_MATCH = -1


def generate_value(rng: np.random.Generator, max_random: int) -> int:
    if max_random < 2:
        raise ConfigurationError(f"max_random must be >= 2, got {max_random}")
    return int(rng.integers(0, max_random))


@dataclass(frozen=True)
class MatchResult:
    matched_iterations: tuple[int, int, int, int]

    @property
    def match_count(self) -> int:
        return sum(1 for m in self.matched_iterations if m >= 0)


def detect_event(
    own_value: int,
    iteration: int,
    received: Sequence[Optional[int]],
    prev: Sequence[Optional[int]],
) -> Optional[MatchResult]:
    """Match ``own_value`` against four neighbour slots.

    ``received`` and ``prev`` are indexed (left, right, top, bottom) with
    ``None`` for an absent neighbour or an empty previous window. Returns
    ``None`` unless at least three slots match.
    """
    entries = []
    for cur, old in zip(received, prev):
        if cur is not None and cur == own_value:
            entries.append(iteration)
        elif old is not None and old == own_value:
            entries.append(iteration - 1)
        else:
            entries.append(NO_MATCH)
    result = MatchResult(tuple(entries))
    return result if result.match_count >= MIN_MATCHES else None


def simulated_identity(rank: int) -> tuple[str, str]:
    ip = f"10.0.{rank // 256}.{rank % 256}"
    mac = "02:00:00:00:" + ":".join(f"{b:02x}" for b in rank.to_bytes(2, "big"))
    return ip, mac


@dataclass
class NodeState:
    rank: int
    neighbors: NeighborSet
    rng: np.random.Generator
    ip: str
    mac: str
    iteration: int = 1
    current_value: int = 0
    prev_received: list[Optional[tuple[int, int]]] = field(default_factory=lambda: [None] * 4)
    activations: int = 0

    def prev_values(self) -> list[Optional[int]]:
        return [None if p is None else p[0] for p in self.prev_received]


class NodeLog:
    """``node_<rank>.log`` (one line per sent frame) and the timing CSV."""

    def __init__(self, out_dir: Path, rank: int):
        self.rank = rank
        self._text = open(out_dir / f"node_{rank}.log", "w")
        self._timing_file = open(out_dir / f"node_{rank}_timing.csv", "w", newline="")
        self._timing = csv.writer(self._timing_file)
        self._timing.writerow(["rank", "iteration", "operation", "duration_s"])
        self.lines = 0

    def sent(self, kind: MessageKind, dest: int, frame: bytes, duration: float, ciphertext: bytes) -> None:
        original = repr(frame)[2:-1]
        self._text.write(
            f"{kind.name} -> {dest} | Original: {original} | "
            f"Encryption time: {duration:.9f} | Encrypted: {ciphertext.hex()}\n"
        )
        self.lines += 1

    def timing(self, sample: TimingSample) -> None:
        self._timing.writerow([sample.rank, sample.iteration, sample.operation.value,
                               f"{sample.duration:.9f}"])

    def close(self) -> None:
        self._text.close()
        self._timing_file.close()


class _Stopped(Exception):
    pass


class SensorNode:
    def __init__(self, rank: int, config, transport: Transport, clock, seed: int):
        self.config = config
        self.transport = transport
        self.clock = clock
        ip, mac = simulated_identity(rank)
        self.state = NodeState(rank, neighbors_of(rank, config.grid),
                               np.random.default_rng(seed), ip, mac)
        self._neighbor_slot = {r: i for i, r in self.state.neighbors.slots() if r is not None}
        # iteration -> sender -> value, for frames that arrived ahead of need
        self._pending: dict[int, dict[int, int]] = {}
        self._go = False
        self._stop_seen = False
        self.sent_counts = {kind: 0 for kind in MessageKind}
        self.log: Optional[NodeLog] = None

    @property
    def rank(self) -> int:
        return self.state.rank

    def _send(self, dest: int, payload: Payload, iteration: int) -> None:
        frame = encode(payload, self.config.packsize)
        ciphertext, duration = xcrypt(frame, self.config.cipher, self.config.sched)
        kind = MessageKind(frame[0])
        if self.log is not None:
            self.log.sent(kind, dest, frame, duration, ciphertext)
            self.log.timing(TimingSample(self.rank, iteration, Operation.ENCRYPT, duration))
        self.transport.send(Envelope(self.rank, dest, ciphertext))
        self.sent_counts[kind] += 1

    def _accept(self, env: Envelope) -> None:
        plain, duration = xcrypt(env.ciphertext, self.config.cipher, self.config.sched)
        if self.log is not None:
            self.log.timing(TimingSample(self.rank, self.state.iteration, Operation.DECRYPT, duration))
        try:
            kind, payload = decode(plain)
            self._dispatch(env.sender, kind, payload)
        except ProtocolError as exc:
            log.error("node %d: dropped frame from %d: %s", self.rank, env.sender, exc)

    def _dispatch(self, sender: int, kind: MessageKind, payload: Payload) -> None:
        t = self.state.iteration
        if kind is MessageKind.NEIGHBOR_VALUE:
            if sender not in self._neighbor_slot:
                raise ProtocolError(f"value from non-neighbour {sender}")
            # a neighbour can run at most one step ahead of this node
            if payload.iteration not in (t, t + 1):
                raise ProtocolError(
                    f"value for iteration {payload.iteration} from {sender} while at {t}"
                )
            slot = self._pending.setdefault(payload.iteration, {})
            if sender in slot:
                raise ProtocolError(f"duplicate value from {sender} for {payload.iteration}")
            slot[sender] = payload.value
        elif sender == BASE_RANK and kind is MessageKind.STOP:
            self._stop_seen = True
        elif sender == BASE_RANK and kind is MessageKind.INIT and payload.is_go_signal:
            self._go = True
        else:
            raise ProtocolError(f"unexpected {kind.name} from rank {sender}")

    def _poll(self) -> None:
        while (env := self.transport.try_recv(self.rank)) is not None:
            self._accept(env)

    def step(self) -> Optional[MatchResult]:
        st = self.state
        t = st.iteration
        st.current_value = generate_value(st.rng, self.config.max_random)
        for dest in st.neighbors.present():
            self._send(dest, NeighborValuePayload(st.current_value, t), t)

        expected = set(self._neighbor_slot)
        while not expected <= self._pending.get(t, {}).keys():
            if self._stop_seen:
                raise _Stopped
            self._accept(self.transport.recv(self.rank))
        got = self._pending.pop(t)
        self.clock.hop()

        received = [None if r is None else got[r] for r in st.neighbors]
        match = detect_event(st.current_value, t, received, st.prev_values())
        if match is not None:
            event = EventPayload(st.current_value, match.matched_iterations,
                                 self.clock.now(), self.clock.timestamp(), t)
            self._send(BASE_RANK, event, t)
            st.activations += 1

        st.prev_received = [None if v is None else (v, t) for v in received]
        self.clock.wait(self.config.interval)
        st.iteration += 1
        return match

    def run(self) -> None:
        out_dir = Path(self.config.out_dir)
        self.log = NodeLog(out_dir, self.rank)
        try:
            self._send(BASE_RANK, InitPayload(self.state.ip, self.state.mac), 0)
            while not self._go:
                self._accept(self.transport.recv(self.rank))
            limit = self.config.iterations
            while limit < 0 or self.state.iteration <= limit:
                self._poll()
                if self._stop_seen:
                    break
                try:
                    self.step()
                except _Stopped:
                    break
            completed = self.state.iteration - 1
            self._send(BASE_RANK, TerminatePayload(completed), completed)
        except TransportClosed:
            log.warning("node %d: transport closed, exiting", self.rank)
        finally:
            self.log.close()

    @property
    def completed_iterations(self) -> int:
        return self.state.iteration - 1
