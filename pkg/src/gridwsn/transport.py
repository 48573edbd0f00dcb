"""Rank-addressed envelope delivery.

Both backends give reliable, FIFO-per-(sender, dest) delivery with a
non-blocking ``send`` and a blocking ``recv``. The TCP backend gives every
rank a listening socket on ``base_port + rank``. Senders connect lazily,
one stream per ordered pair, and frame each envelope as::

    u32 BE length (= 4 + packsize) | u16 BE sender | u16 BE dest | ciphertext
"""

from __future__ import annotations

import logging
import queue
import socket
import struct
import threading
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigurationError, TransportClosed, WSNError

log = logging.getLogger(__name__)

_HEADER = struct.Struct(">IHH")
_CLOSED = object()


@dataclass(frozen=True)
class Envelope:
    sender: int
    dest: int
    ciphertext: bytes

    def __post_init__(self):
        if self.sender == self.dest:
            raise WSNError(f"envelope from rank {self.sender} addressed to itself")


@dataclass(frozen=True)
class TransportConfig:
    backend: str = "memory"
    base_port: int = 47000
    host: str = "127.0.0.1"

    def __post_init__(self):
        if self.backend not in ("memory", "tcp"):
            raise ConfigurationError(f"unknown transport backend {self.backend!r}")
        if not 0 < self.base_port <= 65535:
            raise ConfigurationError(f"base_port {self.base_port} out of range")


class Transport:
    """Shared inbox machinery; subclasses decide how envelopes travel."""

    def __init__(self, size: int, packsize: int):
        self.size = size
        self.packsize = packsize
        self._inboxes = [queue.SimpleQueue() for _ in range(size)]
        self._closed = False

    def _check(self, env: Envelope) -> None:
        if self._closed:
            raise TransportClosed("transport is closed")
        for rank in (env.sender, env.dest):
            if not 0 <= rank < self.size:
                raise WSNError(f"rank {rank} outside 0..{self.size - 1}")
        if len(env.ciphertext) != self.packsize:
            raise WSNError(
                f"ciphertext is {len(env.ciphertext)} bytes, packsize is {self.packsize}"
            )

    def _deliver(self, env: Envelope) -> None:
        self._inboxes[env.dest].put(env)

    def send(self, env: Envelope) -> None:
        raise NotImplementedError

    def recv(self, rank: int, timeout: Optional[float] = None) -> Envelope:
        """Block until an envelope for ``rank`` arrives.

        Raises ``TransportClosed`` once the transport is closed and the
        inbox is drained, and ``queue.Empty`` if ``timeout`` expires.
        """
        item = self._inboxes[rank].get(timeout=timeout)
        if item is _CLOSED:
            self._inboxes[rank].put(_CLOSED)
            raise TransportClosed(f"endpoint {rank} closed")
        return item

    def try_recv(self, rank: int) -> Optional[Envelope]:
        try:
            item = self._inboxes[rank].get_nowait()
        except queue.Empty:
            return None
        if item is _CLOSED:
            self._inboxes[rank].put(_CLOSED)
            raise TransportClosed(f"endpoint {rank} closed")
        return item

    def drain(self) -> list[Envelope]:
        """Remove and return every undelivered envelope (after close)."""
        leftover = []
        for inbox in self._inboxes:
            while True:
                try:
                    item = inbox.get_nowait()
                except queue.Empty:
                    break
                if item is not _CLOSED:
                    leftover.append(item)
            if self._closed:
                inbox.put(_CLOSED)
        return leftover

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for inbox in self._inboxes:
            inbox.put(_CLOSED)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MemoryTransport(Transport):
    def send(self, env: Envelope) -> None:
        self._check(env)
        self._deliver(env)


class TcpTransport(Transport):
    """Loopback sockets, one listener per rank, all hosted in this process."""

    def __init__(self, size: int, packsize: int, base_port: int = 47000, host: str = "127.0.0.1"):
        super().__init__(size, packsize)
        if base_port + size - 1 > 65535:
            raise ConfigurationError(
                f"ports {base_port}..{base_port + size - 1} exceed 65535"
            )
        self.host = host
        self.base_port = base_port
        self._conns: dict[tuple[int, int], tuple[socket.socket, threading.Lock]] = {}
        self._conns_lock = threading.Lock()
        self._dial_locks: dict[tuple[int, int], threading.Lock] = {}
        self._readers: list[threading.Thread] = []
        self._accepted: list[socket.socket] = []
        self._accepted_lock = threading.Lock()
        self._listeners: list[socket.socket] = []
        try:
            for rank in range(size):
                srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
                srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                srv.bind((host, base_port + rank))
                # every other rank may dial in at once
                srv.listen(max(64, size))
                self._listeners.append(srv)
        except OSError as exc:
            for srv in self._listeners:
                srv.close()
            raise ConfigurationError(f"cannot bind port {base_port + len(self._listeners)}: {exc}") from exc
        for rank, srv in enumerate(self._listeners):
            t = threading.Thread(target=self._accept_loop, args=(rank, srv),
                                 name=f"tcp-accept-{rank}", daemon=True)
            t.start()

    def port_of(self, rank: int) -> int:
        return self.base_port + rank

    def _accept_loop(self, rank: int, srv: socket.socket) -> None:
        while True:
            try:
                conn, _ = srv.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            t = threading.Thread(target=self._read_loop, args=(rank, conn),
                                 name=f"tcp-read-{rank}", daemon=True)
            with self._accepted_lock:
                self._accepted.append(conn)
                self._readers.append(t)
            t.start()

    def _read_exact(self, conn: socket.socket, n: int) -> Optional[bytes]:
        buf = bytearray()
        while len(buf) < n:
            chunk = conn.recv(n - len(buf))
            if not chunk:
                return None
            buf += chunk
        return bytes(buf)

    def _read_loop(self, rank: int, conn: socket.socket) -> None:
        expected = 4 + self.packsize
        try:
            while True:
                header = self._read_exact(conn, _HEADER.size)
                if header is None:
                    return
                length, sender, dest = _HEADER.unpack(header)
                if length != expected or dest != rank:
                    log.error("rank %d: bad TCP frame header (length=%d, dest=%d)", rank, length, dest)
                    return
                body = self._read_exact(conn, self.packsize)
                if body is None:
                    return
                self._deliver(Envelope(sender, dest, body))
        except OSError:
            return
        finally:
            conn.close()

    def _connection(self, sender: int, dest: int):
        key = (sender, dest)
        with self._conns_lock:
            entry = self._conns.get(key)
            if entry is not None:
                return entry
            dial = self._dial_locks.setdefault(key, threading.Lock())
        # dial without the table lock so one slow connect never stalls others
        with dial:
            with self._conns_lock:
                entry = self._conns.get(key)
            if entry is None:
                sock = socket.create_connection((self.host, self.port_of(dest)), timeout=30)
                sock.settimeout(None)
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                entry = (sock, threading.Lock())
                with self._conns_lock:
                    self._conns[key] = entry
        return entry

    def send(self, env: Envelope) -> None:
        self._check(env)
        sock, lock = self._connection(env.sender, env.dest)
        data = _HEADER.pack(4 + self.packsize, env.sender, env.dest) + env.ciphertext
        with lock:
            try:
                sock.sendall(data)
            except OSError as exc:
                raise TransportClosed(f"send {env.sender}->{env.dest} failed: {exc}") from exc

    def close(self) -> None:
        if self._closed:
            return
        # half-close outgoing streams so readers see EOF after the last frame
        with self._conns_lock:
            conns = list(self._conns.values())
        for sock, lock in conns:
            with lock:
                try:
                    sock.shutdown(socket.SHUT_WR)
                except OSError:
                    pass
        with self._accepted_lock:
            readers = list(self._readers)
        for t in readers:
            t.join(timeout=5)
        for sock, _ in conns:
            sock.close()
        for srv in self._listeners:
            try:
                srv.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            srv.close()
        with self._accepted_lock:
            for conn in self._accepted:
                try:
                    conn.close()
                except OSError:
                    pass
        super().close()


def make_transport(config: TransportConfig, size: int, packsize: int) -> Transport:
    if config.backend == "memory":
        return MemoryTransport(size, packsize)
    return TcpTransport(size, packsize, config.base_port, config.host)
