"""Base-station actor: registry, event log, stop broadcast and run summary.

With the real clock, frames are handled and logged strictly in arrival
order. With the virtual clock, arrival order between different nodes
depends on thread scheduling, so frames are collected and replayed in
virtual-time order ``(send time, kind, rank)`` once every node has
terminated. Each replayed frame occupies the base's single inbound channel
for one hop, so bursts of events queue up behind each other.
"""

from __future__ import annotations

import csv
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Optional

from .clock import HOP_COST, VirtualClock, virtual_step_end
from .crypto import Operation, TimingSample, xcrypt
from .errors import ProtocolError, TransportClosed
from .topology import BASE_RANK, GridConfig, neighbor_count, neighbors_of
from .transport import Envelope, Transport
from .wire import (EventPayload, InitPayload, MessageKind, StopPayload,
                   TerminatePayload, decode, encode)

log = logging.getLogger(__name__)

EVENT_COLUMNS = [
    "iteration", "activated_rank", "value", "match_count",
    "matched_left", "matched_right", "matched_top", "matched_bottom",
    "detect_time_s", "recv_time_s", "comm_time_s", "decrypt_time_s",
]
TOTAL_COLUMNS = [
    "total_simulation_time_s", "total_events", "total_base_messages",
    "total_node_to_node_messages", "total_network_messages", "total_activations",
]
SUMMARY_COLUMNS = ["row", "rank", *TOTAL_COLUMNS, "activations"]
TIMING_COLUMNS = ["rank", "iteration", "operation", "duration_s"]


@dataclass
class NodeInfo:
    ip: str
    mac: str


@dataclass(frozen=True)
class Adjacent:
    rank: int
    ip: str
    mac: str
    matched_iteration: int


@dataclass(frozen=True)
class EventRecord:
    iteration: int
    logged_time: str
    reported_time: str
    activated_rank: int
    activated_ip: str
    activated_mac: str
    adjacent: tuple[Adjacent, ...]
    value: int
    matched_iterations: tuple[int, int, int, int]
    detect_time: float
    recv_time: float
    communication_time: float
    decryption_time: float
    messages_with_base: int
    activations_this_message: int
    total_activations: int

    def csv_row(self) -> list:
        return [self.iteration, self.activated_rank, self.value, self.activations_this_message,
                *self.matched_iterations, f"{self.detect_time:.9f}", f"{self.recv_time:.9f}",
                f"{self.communication_time:.9f}", f"{self.decryption_time:.9f}"]

    def to_text(self) -> str:
        lines = [
            f"Iteration : {self.iteration}",
            f"Logged time : {self.logged_time}",
            f"Alert reported time : {self.reported_time}",
            f"Activated node : Rank {self.activated_rank} | MAC {self.activated_mac} | IP {self.activated_ip}",
            "Adjacent nodes :",
        ]
        lines += [
            f"    Rank {a.rank} | MAC {a.mac} | IP {a.ip} | Iteration {a.matched_iteration}"
            for a in self.adjacent
        ]
        lines += [
            f"Triggered value : {self.value}",
            f"Communication time (s) : {self.communication_time:.9f}",
            f"Decryption time (s) : {self.decryption_time:.9f}",
            f"Total messages with base station : {self.messages_with_base}",
            f"Total activations in this message : {self.activations_this_message}",
            f"Total activations : {self.total_activations}",
        ]
        return "\n".join(lines)


@dataclass
class RunSummary:
    total_simulation_time: float
    total_events: int
    total_base_messages: int
    total_node_to_node_messages: int
    total_network_messages: int
    total_activations: int
    activations: dict[int, int] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"Total simulation time (s) : {self.total_simulation_time:.9f}",
            f"Total events detected : {self.total_events}",
            f"Total messages with base station : {self.total_base_messages}",
            f"Total sensor node to sensor node messages : {self.total_node_to_node_messages}",
            f"Total messages through the network : {self.total_network_messages}",
            f"Total activations : {self.total_activations}",
            "Activations per node :",
        ]
        lines += [f"    Rank {r} : {n}" for r, n in sorted(self.activations.items())]
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SUMMARY_COLUMNS)
            w.writerow(["total", "", f"{self.total_simulation_time:.9f}", self.total_events,
                        self.total_base_messages, self.total_node_to_node_messages,
                        self.total_network_messages, self.total_activations, ""])
            for rank, n in sorted(self.activations.items()):
                w.writerow(["rank", rank, *[""] * len(TOTAL_COLUMNS), n])

    @classmethod
    def read_csv(cls, path) -> "RunSummary":
        totals = None
        activations = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["row"] == "total":
                    totals = row
                elif row["row"] == "rank":
                    activations[int(row["rank"])] = int(row["activations"])
        if totals is None:
            raise ValueError(f"{path}: no totals row")
        return cls(
            float(totals["total_simulation_time_s"]),
            *(int(totals[c]) for c in TOTAL_COLUMNS[1:]),
            activations=activations,
        )


class BaseStation:
    def __init__(self, config, transport: Transport, clock, command_stream: Optional[IO[str]] = None):
        self.config = config
        self.grid: GridConfig = config.grid
        self.transport = transport
        self.clock = clock
        self.command_stream = command_stream
        self.registry: dict[int, NodeInfo] = {}
        self.phase = "registration"
        self.activations = {r: 0 for r in self.grid.sensor_ranks()}
        self.final_iterations: dict[int, int] = {}
        self.total_events = 0
        self.total_activations = 0
        self.records: list[EventRecord] = []
        self.summary: Optional[RunSummary] = None
        self._stop_lock = threading.Lock()
        self._stop_sent = False
        self.stop_frames_sent = 0
        self._text: Optional[IO[str]] = None
        self._events = None
        self._timing = None
        self._files: list[IO] = []

    # ---- logs -----------------------------------------------------------

    def _open_logs(self) -> None:
        out = Path(self.config.out_dir)
        self._text = open(out / "base_station.log", "w")
        events_file = open(out / "events.csv", "w", newline="")
        timing_file = open(out / "decrypt_timing.csv", "w", newline="")
        self._files = [self._text, events_file, timing_file]
        self._events = csv.writer(events_file)
        self._events.writerow(EVENT_COLUMNS)
        self._timing = csv.writer(timing_file)
        self._timing.writerow(TIMING_COLUMNS)

    def _close_logs(self) -> None:
        for fh in self._files:
            fh.close()
        self._files = []

    def _write_record(self, record: EventRecord) -> None:
        self.records.append(record)
        if self._text is not None:
            self._text.write(record.to_text() + "\n\n")
            self._events.writerow(record.csv_row())

    # ---- frame handlers -------------------------------------------------

    def _check_sender(self, sender: int) -> None:
        if not 1 <= sender <= self.grid.sensor_count:
            raise ProtocolError(f"rank {sender} is not a sensor rank")

    def register_node(self, sender: int, payload: InitPayload) -> None:
        self._check_sender(sender)
        if self.phase != "registration":
            raise ProtocolError(f"init from rank {sender} after the iteration phase began")
        if sender in self.registry:
            raise ProtocolError(f"duplicate init from rank {sender}")
        if payload.is_go_signal:
            raise ProtocolError(f"init from rank {sender} carries no identity")
        self.registry[sender] = NodeInfo(payload.ip, payload.mac)

    def handle_event(self, sender: int, payload: EventPayload, recv_complete_time: float,
                     decryption_time: float) -> EventRecord:
        self._check_sender(sender)
        if sender not in self.registry:
            raise ProtocolError(f"event from unregistered rank {sender}")
        t = payload.iteration
        count = payload.match_count
        if count < 3:
            raise ProtocolError(f"event from rank {sender} has only {count} matches")
        adjacent = []
        for slot, rank in neighbors_of(sender, self.grid).slots():
            matched = payload.matched_iterations[slot]
            if matched < 0:
                continue
            if rank is None:
                raise ProtocolError(f"event from rank {sender} matches an absent neighbour")
            if matched not in (t, t - 1):
                raise ProtocolError(f"matched iteration {matched} outside window of {t}")
            info = self.registry.get(rank)
            if info is None:
                raise ProtocolError(f"event names unregistered neighbour {rank}")
            adjacent.append(Adjacent(rank, info.ip, info.mac, matched))

        self.total_events += 1
        self.total_activations += count
        self.activations[sender] += 1
        me = self.registry[sender]
        record = EventRecord(
            iteration=t,
            logged_time=self.clock.timestamp(),
            reported_time=payload.timestamp,
            activated_rank=sender,
            activated_ip=me.ip,
            activated_mac=me.mac,
            adjacent=tuple(adjacent),
            value=payload.value,
            matched_iterations=payload.matched_iterations,
            detect_time=payload.detect_time,
            recv_time=recv_complete_time,
            communication_time=recv_complete_time - payload.detect_time,
            decryption_time=decryption_time,
            messages_with_base=self.total_events + len(self.final_iterations),
            activations_this_message=count,
            total_activations=self.total_activations,
        )
        self._write_record(record)
        return record

    def handle_terminate(self, sender: int, payload: TerminatePayload) -> None:
        self._check_sender(sender)
        if sender in self.final_iterations:
            raise ProtocolError(f"duplicate termination from rank {sender}")
        self.final_iterations[sender] = payload.final_iteration

    # ---- stop command ---------------------------------------------------

    def broadcast_stop(self) -> bool:
        """Send one Stop frame to every sensor; only the first call sends."""
        with self._stop_lock:
            if self._stop_sent:
                return False
            self._stop_sent = True
        frame = encode(StopPayload(), self.config.packsize)
        for rank in self.grid.sensor_ranks():
            ciphertext, _ = xcrypt(frame, self.config.cipher, self.config.sched)
            try:
                self.transport.send(Envelope(BASE_RANK, rank, ciphertext))
            except TransportClosed:
                return True
            self.stop_frames_sent += 1
        return True

    def stop_listener(self, stream: Iterable[str]) -> None:
        """Watch ``stream`` line by line; the exact line ``stop`` ends the run."""
        try:
            for line in stream:
                if line.rstrip("\r\n") == "stop":
                    if self.broadcast_stop():
                        log.info("stop command received, broadcasting")
        except (ValueError, OSError):
            pass

    def start_stop_listener(self, stream: Iterable[str]) -> threading.Thread:
        t = threading.Thread(target=self.stop_listener, args=(stream,),
                             name="stop-listener", daemon=True)
        t.start()
        return t

    # ---- main loop ------------------------------------------------------

    def _receive(self) -> Optional[tuple[int, MessageKind, object, float, int]]:
        env = self.transport.recv(BASE_RANK)
        plain, duration = xcrypt(env.ciphertext, self.config.cipher, self.config.sched)
        try:
            kind, payload = decode(plain)
        except ProtocolError as exc:
            log.error("base: dropped undecodable frame from %d: %s", env.sender, exc)
            self._timing.writerow([BASE_RANK, 0, Operation.DECRYPT.value, f"{duration:.9f}"])
            return None
        if kind is MessageKind.EVENT:
            iteration = payload.iteration
        elif kind is MessageKind.TERMINATE:
            iteration = payload.final_iteration
        else:
            iteration = 0
        sample = TimingSample(BASE_RANK, iteration, Operation.DECRYPT, duration)
        self._timing.writerow([sample.rank, sample.iteration, sample.operation.value,
                               f"{sample.duration:.9f}"])
        return env.sender, kind, payload, duration, iteration

    def _dispatch(self, sender, kind, payload, recv_time, decrypt_time) -> None:
        try:
            if kind is MessageKind.EVENT:
                self.handle_event(sender, payload, recv_time, decrypt_time)
            elif kind is MessageKind.TERMINATE:
                self.handle_terminate(sender, payload)
            elif kind is MessageKind.INIT:
                self.register_node(sender, payload)
            else:
                raise ProtocolError(f"unexpected {kind.name} from rank {sender}")
        except ProtocolError as exc:
            log.error("base: dropped frame: %s", exc)

    def run(self) -> RunSummary:
        Path(self.config.out_dir).mkdir(parents=True, exist_ok=True)
        self._open_logs()
        try:
            return self._run()
        finally:
            self._close_logs()

    def _run(self) -> RunSummary:
        start = self.clock.now()
        n = self.grid.sensor_count
        while len(self.registry) < n:
            got = self._receive()
            if got is None:
                continue
            sender, kind, payload, _, _ = got
            if kind is MessageKind.INIT:
                try:
                    self.register_node(sender, payload)
                except ProtocolError as exc:
                    log.error("base: %s", exc)
            else:
                log.error("base: %s from %d during registration", kind.name, sender)

        self.phase = "events"
        go = encode(InitPayload(), self.config.packsize)
        for rank in self.grid.sensor_ranks():
            ciphertext, _ = xcrypt(go, self.config.cipher, self.config.sched)
            self.transport.send(Envelope(BASE_RANK, rank, ciphertext))
        if self.command_stream is not None:
            self.start_stop_listener(self.command_stream)

        if self.clock.virtual:
            total_time = self._virtual_event_phase()
        else:
            while len(self.final_iterations) < n:
                got = self._receive()
                if got is None:
                    continue
                sender, kind, payload, duration, _ = got
                self._dispatch(sender, kind, payload, self.clock.now(), duration)
            total_time = self.clock.now() - start
        return self._finish(total_time)

    def _virtual_event_phase(self) -> float:
        n = self.grid.sensor_count
        pending = []
        terminated = set()
        while len(terminated) < n:
            got = self._receive()
            if got is None:
                continue
            sender, kind, payload, _, _ = got
            if kind is MessageKind.EVENT:
                sent_at = payload.detect_time
            elif kind is MessageKind.TERMINATE:
                sent_at = virtual_step_end(payload.final_iteration, self.config.interval)
                terminated.add(sender)
            else:
                sent_at = 0.0
            pending.append((sent_at, int(kind), sender, payload))

        # fresh iteration-phase clock; decryption contributes no virtual time
        channel = VirtualClock()
        self.clock = channel
        pending.sort(key=lambda item: item[:3])
        for sent_at, kind, sender, payload in pending:
            channel.advance_to(sent_at)
            channel.wait(HOP_COST)
            self._dispatch(sender, MessageKind(kind), payload, channel.now(), 0.0)
        return channel.now()

    def _finish(self, total_time: float) -> RunSummary:
        n2n = sum(k * neighbor_count(r, self.grid) for r, k in self.final_iterations.items())
        terminations = len(self.final_iterations)
        summary = RunSummary(
            total_simulation_time=total_time,
            total_events=self.total_events,
            total_base_messages=self.total_events + terminations,
            total_node_to_node_messages=n2n,
            total_network_messages=n2n + self.total_events + terminations,
            total_activations=self.total_activations,
            activations=dict(self.activations),
        )
        self._text.write(summary.to_text() + "\n")
        summary.write_csv(Path(self.config.out_dir) / "summary.csv")
        self.summary = summary
        return summary
