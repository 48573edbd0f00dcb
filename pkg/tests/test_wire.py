import pytest
from hypothesis import given, strategies as st

from gridwsn.errors import EncodingError, ProtocolError
from gridwsn.node import simulated_identity
from gridwsn.wire import (ENCODED_SIZE, EventPayload, InitPayload, MessageKind,
                          NeighborValuePayload, StopPayload, TerminatePayload, decode,
                          encode, is_timestamp)

u32 = st.integers(0, 2**32 - 1)
packsizes = st.sampled_from([80, 96, 256, 1024])


def test_stop_frame():
    assert encode(StopPayload(), 256) == bytes([4]) + bytes(255)


def test_neighbor_value_layout():
    frame = encode(NeighborValuePayload(5, 12), 256)
    assert frame[:9] == bytes([1, 5, 0, 0, 0, 12, 0, 0, 0])
    assert frame[9:] == bytes(247)


def test_event_layout():
    ev = EventPayload(7, (3, -1, 2, 3), 1.5, "2000-01-01 00:00:01.500", 3)
    frame = encode(ev, 256)
    assert frame[0] == 2
    assert frame[1:5] == (7).to_bytes(4, "little")
    assert frame[5:13] == (3).to_bytes(8, "little")
    assert frame[13:21] == b"\xff" * 8
    assert frame[45] == 23 and frame[46:69] == b"2000-01-01 00:00:01.500"
    assert frame[69:73] == (3).to_bytes(4, "little")
    assert frame[73:] == bytes(256 - 73)


def test_init_layout():
    frame = encode(InitPayload("10.0.0.7", "02:00:00:00:00:07"), 256)
    assert frame[1] == 8 and frame[2:10] == b"10.0.0.7"
    assert frame[17] == 17 and frame[18:35] == b"02:00:00:00:00:07"


def test_zero_frame_is_empty_init():
    assert decode(bytes(256)) == (MessageKind.INIT, InitPayload("", ""))


def test_unknown_tag():
    with pytest.raises(ProtocolError):
        decode(bytes([9]) + bytes(255))


def test_malformed_text_length():
    frame = bytearray(encode(InitPayload("10.0.0.1", "02:00:00:00:00:01"), 256))
    frame[1] = 40
    with pytest.raises(ProtocolError):
        decode(bytes(frame))


def test_packsize_rules():
    for bad in (48, 72, 100):
        with pytest.raises(EncodingError):
            encode(StopPayload(), bad)
    # 64 is a legal frame size but too small for an event report
    encode(InitPayload("10.0.0.1", "02:00:00:00:00:01"), 64)
    encode(NeighborValuePayload(1, 1), 64)
    with pytest.raises(EncodingError):
        encode(EventPayload(1, (1, 1, 1, -1), 0.0, "", 1), 64)
    assert ENCODED_SIZE[MessageKind.EVENT] <= 80


def test_field_validation():
    with pytest.raises(EncodingError):
        NeighborValuePayload(2**32, 1)
    with pytest.raises(EncodingError):
        InitPayload("300.1.1.1", "")
    with pytest.raises(EncodingError):
        InitPayload("", "zz:00:00:00:00:00")


timestamps = st.builds(
    lambda y, mo, d, h, mi, s, ms: f"{y:04d}-{mo:02d}-{d:02d} {h:02d}:{mi:02d}:{s:02d}.{ms:03d}",
    st.integers(2000, 2099), st.integers(1, 12), st.integers(1, 28), st.integers(0, 23),
    st.integers(0, 59), st.integers(0, 59), st.integers(0, 999))

payloads = st.one_of(
    st.integers(1, 65535).map(lambda r: InitPayload(*simulated_identity(r))),
    st.builds(NeighborValuePayload, u32, u32),
    st.builds(EventPayload, u32,
              st.tuples(*[st.integers(-1, 2**40)] * 4),
              st.floats(allow_nan=False, allow_infinity=True),
              timestamps, u32),
    st.builds(TerminatePayload, u32),
    st.just(StopPayload()),
)


@given(payloads, packsizes)
def test_round_trip(payload, packsize):
    frame = encode(payload, packsize)
    assert len(frame) == packsize
    assert encode(payload, packsize) == frame
    kind, back = decode(frame)
    assert back == payload
    assert kind == frame[0]


@given(timestamps)
def test_timestamp_grammar(ts):
    assert len(ts) == 23 and is_timestamp(ts)
