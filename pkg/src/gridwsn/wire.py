"""Fixed-size plaintext frames for the five message kinds.

Every frame is exactly ``packsize`` bytes. Byte 0 is the kind tag, fields
follow at fixed offsets (little-endian integers, IEEE-754 doubles, text as
a one-byte length plus a fixed-width byte field) and the rest is zero.

    kind           offset  field
    Init           1       ip          (1 + 15)
                   17      mac         (1 + 17)
    NeighborValue  1       value       u32
                   5       iteration   u32
    Event          1       value       u32
                   5       matched     4 x i64  (left, right, top, bottom)
                   37      detect_time f64
                   45      timestamp   (1 + 23)
                   69      iteration   u32
    Terminate      1       final_iter  u32
    Stop           -       tag only
"""

from __future__ import annotations

import ipaddress
import re
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Union

from .errors import EncodingError, ProtocolError

DEFAULT_PACKSIZE = 256
MIN_PACKSIZE = 64

IP_WIDTH = 15
MAC_WIDTH = 17
TIMESTAMP_WIDTH = 23

_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}(:[0-9a-fA-F]{2}){5}$")
_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}\.\d{3}$")
_U32 = 2**32


class MessageKind(IntEnum):
    INIT = 0
    NEIGHBOR_VALUE = 1
    EVENT = 2
    TERMINATE = 3
    STOP = 4


@dataclass(frozen=True)
class InitPayload:
    """Node identity. Both fields empty is the base station's go-signal."""

    ip: str = ""
    mac: str = ""

    def __post_init__(self):
        if len(self.ip) > IP_WIDTH or len(self.mac) > MAC_WIDTH:
            raise EncodingError(f"init fields too long: {self.ip!r}, {self.mac!r}")
        if self.ip:
            try:
                ipaddress.IPv4Address(self.ip)
            except ValueError as exc:
                raise EncodingError(f"bad IPv4 address {self.ip!r}") from exc
        if self.mac and not _MAC_RE.match(self.mac):
            raise EncodingError(f"bad MAC address {self.mac!r}")

    @property
    def is_go_signal(self) -> bool:
        return not self.ip and not self.mac


@dataclass(frozen=True)
class NeighborValuePayload:
    value: int
    iteration: int

    def __post_init__(self):
        _check_u32("value", self.value)
        _check_u32("iteration", self.iteration)


@dataclass(frozen=True)
class EventPayload:
    value: int
    matched_iterations: tuple[int, int, int, int]
    detect_time: float
    timestamp: str
    iteration: int

    def __post_init__(self):
        _check_u32("value", self.value)
        _check_u32("iteration", self.iteration)
        object.__setattr__(self, "matched_iterations", tuple(self.matched_iterations))
        if len(self.matched_iterations) != 4:
            raise EncodingError("matched_iterations must have exactly 4 entries")
        for entry in self.matched_iterations:
            if not -(2**63) <= entry < 2**63:
                raise EncodingError(f"matched iteration {entry} out of i64 range")
        if len(self.timestamp) > TIMESTAMP_WIDTH:
            raise EncodingError(f"timestamp too long: {self.timestamp!r}")

    @property
    def match_count(self) -> int:
        return sum(1 for m in self.matched_iterations if m >= 0)


@dataclass(frozen=True)
class TerminatePayload:
    final_iteration: int

    def __post_init__(self):
        _check_u32("final_iteration", self.final_iteration)


@dataclass(frozen=True)
class StopPayload:
    pass


Payload = Union[InitPayload, NeighborValuePayload, EventPayload, TerminatePayload, StopPayload]

_KIND_OF = {
    InitPayload: MessageKind.INIT,
    NeighborValuePayload: MessageKind.NEIGHBOR_VALUE,
    EventPayload: MessageKind.EVENT,
    TerminatePayload: MessageKind.TERMINATE,
    StopPayload: MessageKind.STOP,
}

# encoded lengths, tag byte included
ENCODED_SIZE = {
    MessageKind.INIT: 1 + (1 + IP_WIDTH) + (1 + MAC_WIDTH),
    MessageKind.NEIGHBOR_VALUE: 9,
    MessageKind.EVENT: 45 + 1 + TIMESTAMP_WIDTH + 4,
    MessageKind.TERMINATE: 5,
    MessageKind.STOP: 1,
}
MAX_ENCODED_SIZE = max(ENCODED_SIZE.values())


def _check_u32(name: str, value: int) -> None:
    if not 0 <= value < _U32:
        raise EncodingError(f"{name}={value} does not fit in an unsigned 32-bit field")


def check_packsize(packsize: int) -> None:
    if packsize < MIN_PACKSIZE or packsize % 16:
        raise EncodingError(
            f"packsize must be a multiple of 16 and at least {MIN_PACKSIZE}, got {packsize}"
        )


def kind_of(payload: Payload) -> MessageKind:
    return _KIND_OF[type(payload)]


def _put_text(buf: bytearray, offset: int, text: str, width: int) -> None:
    try:
        raw = text.encode("ascii")
    except UnicodeEncodeError as exc:
        raise EncodingError(f"text field must be ASCII: {text!r}") from exc
    buf[offset] = len(raw)
    buf[offset + 1 : offset + 1 + len(raw)] = raw


def _get_text(frame: bytes, offset: int, width: int) -> str:
    length = frame[offset]
    if length > width:
        raise ProtocolError(f"text length {length} at offset {offset} exceeds field width {width}")
    try:
        return frame[offset + 1 : offset + 1 + length].decode("ascii")
    except UnicodeDecodeError as exc:
        raise ProtocolError(f"non-ASCII text at offset {offset}") from exc


def encode(payload: Payload, packsize: int = DEFAULT_PACKSIZE) -> bytes:
    kind = kind_of(payload)
    check_packsize(packsize)
    if ENCODED_SIZE[kind] > packsize:
        raise EncodingError(
            f"{kind.name} needs {ENCODED_SIZE[kind]} bytes, packsize is {packsize}"
        )
    buf = bytearray(packsize)
    buf[0] = kind
    if kind is MessageKind.INIT:
        _put_text(buf, 1, payload.ip, IP_WIDTH)
        _put_text(buf, 17, payload.mac, MAC_WIDTH)
    elif kind is MessageKind.NEIGHBOR_VALUE:
        struct.pack_into("<II", buf, 1, payload.value, payload.iteration)
    elif kind is MessageKind.EVENT:
        struct.pack_into("<I4qd", buf, 1, payload.value, *payload.matched_iterations,
                         payload.detect_time)
        _put_text(buf, 45, payload.timestamp, TIMESTAMP_WIDTH)
        struct.pack_into("<I", buf, 69, payload.iteration)
    elif kind is MessageKind.TERMINATE:
        struct.pack_into("<I", buf, 1, payload.final_iteration)
    return bytes(buf)


def decode(frame: bytes) -> tuple[MessageKind, Payload]:
    if not frame:
        raise ProtocolError("empty frame")
    try:
        kind = MessageKind(frame[0])
    except ValueError:
        raise ProtocolError(f"unknown message tag {frame[0]}") from None
    if len(frame) < ENCODED_SIZE[kind]:
        raise ProtocolError(f"{kind.name} frame truncated to {len(frame)} bytes")
    try:
        if kind is MessageKind.INIT:
            payload = InitPayload(_get_text(frame, 1, IP_WIDTH), _get_text(frame, 17, MAC_WIDTH))
        elif kind is MessageKind.NEIGHBOR_VALUE:
            payload = NeighborValuePayload(*struct.unpack_from("<II", frame, 1))
        elif kind is MessageKind.EVENT:
            value, *matched, detect_time = struct.unpack_from("<I4qd", frame, 1)
            payload = EventPayload(value, tuple(matched), detect_time,
                                   _get_text(frame, 45, TIMESTAMP_WIDTH),
                                   struct.unpack_from("<I", frame, 69)[0])
        elif kind is MessageKind.TERMINATE:
            payload = TerminatePayload(*struct.unpack_from("<I", frame, 1))
        else:
            payload = StopPayload()
    except EncodingError as exc:
        raise ProtocolError(str(exc)) from exc
    return kind, payload


def is_timestamp(text: str) -> bool:
    return bool(_TS_RE.match(text))
