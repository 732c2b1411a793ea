from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qnav_sim.core import SINK, ConfigError, ScenarioConfig, four_node_scenario, seconds_to_ms
from qnav_sim.frames import (
    Frame,
    FrameKind,
    baseline_nav_cts,
    baseline_nav_rts,
    build_exchange,
    frame_duration,
    scenario_baseline_nav,
)


@pytest.mark.parametrize("prop, expected", [
    ("3.3333", 23000),
    (Fraction(5000, 1500), 23000),
    (0, 13000),
    (1.0, 16000),
])
def test_baseline_nav_rts(prop, expected):
    assert baseline_nav_rts(prop, 3.0, 7.0, 3.0) == expected


@pytest.mark.parametrize("prop, expected", [
    ("3.3333", 16667),
    (Fraction(5000, 1500), 16667),
    (0, 10000),
    (1.0, 12000),
])
def test_baseline_nav_cts(prop, expected):
    assert baseline_nav_cts(prop, 7.0, 3.0) == expected


def test_baseline_rejects_negative():
    with pytest.raises(ValueError):
        baseline_nav_rts(-1, 3, 7, 3)


@given(st.fractions(min_value=0, max_value=10), st.sampled_from(["1.0", "3.0", "5.5"]),
       st.sampled_from(["7.0", "2.0"]))
def test_rts_nav_covers_cts_leg(prop, ctrl, data):
    rts = baseline_nav_rts(prop, ctrl, data, ctrl)
    cts = baseline_nav_cts(prop, data, ctrl)
    # Rounding happens once per NAV, so allow the two 0.5 ms roundings.
    assert abs((rts - cts) - seconds_to_ms(prop + Fraction(ctrl))) <= 1
    assert rts >= cts + seconds_to_ms(prop) - 1


def test_scenario_baseline_uses_max_range():
    cfg = four_node_scenario()
    assert scenario_baseline_nav(FrameKind.RTS, cfg) == 23000
    assert scenario_baseline_nav(FrameKind.CTS, cfg) == 16667
    with pytest.raises(ValueError):
        scenario_baseline_nav(FrameKind.DATA, cfg)


def test_frame_kind_durations():
    cfg = four_node_scenario()
    assert frame_duration(FrameKind.RTS, cfg) == 3000
    assert frame_duration(FrameKind.CTS, cfg) == 3000
    assert frame_duration(FrameKind.ACK, cfg) == 3000
    assert frame_duration(FrameKind.DATA, cfg) == 7000


def test_frame_invariants():
    with pytest.raises(ValueError):
        Frame(FrameKind.RTS, 1, 1, 0, 3000)
    with pytest.raises(ValueError):
        Frame(FrameKind.RTS, 1, 0, 3000, 3000)


def test_exchange_node1_hand_stepped():
    s = build_exchange(1, SINK, 0, four_node_scenario())
    spans = {f.kind: (f.tx_start, f.tx_end) for f in s.frames}
    assert spans == {
        FrameKind.RTS: (0, 3000),
        FrameKind.CTS: (4000, 7000),
        FrameKind.DATA: (8000, 15000),
        FrameKind.ACK: (16000, 19000),
    }
    assert s.arrival(FrameKind.RTS, SINK).end == 4000
    assert s.channel_busy_end_at_sink == 19000
    assert s.complete_at_initiator == 20000


def test_overheard_rts_window_at_node2():
    s = build_exchange(1, SINK, 0, four_node_scenario())
    a = s.arrival(FrameKind.RTS, 2)
    assert (a.start, a.end) == (333, 3333)


def test_colocated_exchange_is_sum_of_durations():
    cfg = ScenarioConfig(node_positions=((0, 0), (1, 0)))
    s = build_exchange(1, SINK, 0, cfg)
    assert s.complete_at_initiator == 16000
    assert s.channel_busy_end_at_sink == 16000


def test_reply_waits_for_full_arrival():
    s = build_exchange(3, SINK, 0, four_node_scenario())
    rts, cts, data, ack = s.frames
    assert cts.tx_start >= s.arrival(FrameKind.RTS, SINK).end
    assert data.tx_start >= s.arrival(FrameKind.CTS, 3).end
    assert ack.tx_start >= s.arrival(FrameKind.DATA, SINK).end


def test_exchange_errors():
    cfg = four_node_scenario()
    with pytest.raises(ConfigError):
        build_exchange(SINK, SINK, 0, cfg)
    with pytest.raises(ConfigError):
        build_exchange(7, SINK, 0, cfg)
    # Node 2 sits 6000 m from node 1; both are in sink range, not in each other's.
    wide = ScenarioConfig(node_positions=((0, 0), (1, -3000), (2, 3000)))
    s = build_exchange(1, SINK, 0, wide)
    assert s.arrival(FrameKind.RTS, 2) is None
    assert s.arrival(FrameKind.CTS, 2) is not None


layouts = st.lists(st.integers(0, 5000), min_size=1, max_size=4)


@given(layouts, st.integers(0, 10**7))
def test_arrival_lengths_and_translation(pos, shift):
    cfg = ScenarioConfig(node_positions=((0, 0), *((i + 1, p) for i, p in enumerate(pos))))
    base = build_exchange(1, SINK, 0, cfg)
    moved = build_exchange(1, SINK, shift, cfg)
    for a in base.arrivals:
        assert a.end - a.start == a.frame.duration
    for f0, f1 in zip(base.frames, moved.frames):
        assert (f1.tx_start - f0.tx_start, f1.tx_end - f0.tx_end) == (shift, shift)
    for a0, a1 in zip(base.arrivals, moved.arrivals):
        assert (a1.start - a0.start, a1.end - a0.end) == (shift, shift)
    assert moved.channel_busy_end_at_sink - base.channel_busy_end_at_sink == shift


def test_timeline_csv():
    text = build_exchange(1, SINK, 0, four_node_scenario()).to_csv()
    lines = text.splitlines()
    assert lines[0] == "time,node,action,frame_kind,peer"
    assert lines[1] == "0.000,1,tx_start,RTS,0"
    # sink finishes receiving the RTS before it keys up the CTS
    i_rx = lines.index("4.000,0,rx_end,RTS,1")
    i_tx = lines.index("4.000,0,tx_start,CTS,1")
    assert i_rx < i_tx
    assert lines[-1] == "21.000,3,rx_end,ACK,0"  # farthest listener, 2 s from the sink
    assert len(lines) == 1 + 4 * 2 + 4 * 3 * 2
