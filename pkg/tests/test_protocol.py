"""Wire message schema: round trips and strict rejection."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pvc.protocol import (
    Bye,
    Hello,
    ItemError,
    LeaseGrant,
    Ping,
    Pong,
    ProtocolError,
    Result,
    TaskSpec,
    Welcome,
    WireItem,
    decode_message,
    encode_message,
)


def test_hello_encodes_to_documented_frame():
    frame = encode_message(Hello(agent="native", cores=2))
    assert frame == '{"type":"hello","agent":"native","cores":2}'


def test_ping_encodes_to_documented_frame():
    assert encode_message(Ping(t=0)) == '{"type":"ping","t":0}'


def test_result_decodes():
    msg = decode_message(
        '{"type":"result","lease_id":"L1","index":3,"value":8,"elapsed_ms":1.5}')
    assert msg == Result(lease_id="L1", index=3, value=8, elapsed_ms=1.5)


def test_unknown_type_rejected():
    with pytest.raises(ProtocolError) as err:
        decode_message('{"type":"warp"}')
    assert err.value.field == "type"


def test_negative_index_rejected():
    with pytest.raises(ProtocolError) as err:
        decode_message('{"type":"result","lease_id":"L1","index":-1,'
                       '"value":8,"elapsed_ms":1.5}')
    assert err.value.field == "index"


def test_missing_field_rejected():
    with pytest.raises(ProtocolError) as err:
        decode_message('{"type":"hello","agent":"native"}')
    assert err.value.field == "cores"


def test_extra_field_rejected():
    with pytest.raises(ProtocolError) as err:
        decode_message('{"type":"bye","extra":1}')
    assert err.value.field == "extra"


def test_bool_is_not_an_integer():
    with pytest.raises(ProtocolError):
        decode_message('{"type":"hello","agent":"x","cores":true}')


def test_malformed_json_rejected():
    with pytest.raises(ProtocolError):
        decode_message("{nope")
    with pytest.raises(ProtocolError):
        decode_message('"just a string"')


def test_frames_are_single_line():
    task = TaskSpec("collatz", {"note": "line\nbreak"})
    frame = encode_message(Welcome(worker_id="w1", task=task, window=2))
    assert "\n" not in frame


def test_lease_needs_items():
    with pytest.raises(ProtocolError):
        decode_message('{"type":"lease","lease_id":"L0","items":[]}')


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10**9, 10**9)
    | st.floats(allow_nan=False, allow_infinity=False) | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=8,
)


@st.composite
def messages(draw):
    which = draw(st.integers(0, 7))
    if which == 0:
        return Hello(agent=draw(st.text(max_size=16)),
                     cores=draw(st.integers(1, 64)),
                     worker_id=draw(st.none() | st.text(min_size=1, max_size=8)))
    if which == 1:
        return Welcome(worker_id=draw(st.text(max_size=8)),
                       task=TaskSpec(draw(st.text(min_size=1, max_size=12)),
                                     draw(st.dictionaries(st.text(max_size=6),
                                                          json_values, max_size=3))),
                       window=draw(st.integers(1, 16)))
    if which == 2:
        items = draw(st.lists(
            st.tuples(st.integers(0, 10**6), json_values), min_size=1, max_size=4))
        return LeaseGrant(lease_id=draw(st.text(max_size=8)),
                          items=tuple(WireItem(i, v) for i, v in items))
    if which == 3:
        return Result(lease_id=draw(st.text(max_size=8)),
                      index=draw(st.integers(0, 10**6)),
                      value=draw(json_values),
                      elapsed_ms=draw(st.floats(0, 1e6, allow_nan=False)))
    if which == 4:
        return ItemError(lease_id=draw(st.text(max_size=8)),
                         index=draw(st.integers(0, 10**6)),
                         message=draw(st.text(max_size=40)))
    if which == 5:
        return Ping(t=draw(st.floats(0, 1e12, allow_nan=False)))
    if which == 6:
        return Pong(t=draw(st.floats(0, 1e12, allow_nan=False)))
    return Bye()


@given(messages())
def test_round_trip_identity(msg):
    frame = encode_message(msg)
    assert "\n" not in frame
    assert json.loads(frame)["type"]  # one object per frame, tagged
    assert decode_message(frame) == msg
