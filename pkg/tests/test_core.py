from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qnav_sim.core import (
    SINK,
    ConfigError,
    ScenarioConfig,
    ceil_ticks,
    dump_config,
    format_seconds,
    four_node_scenario,
    load_config,
    ms_to_ticks,
    pair_distance,
    parse_config,
    propagation_delay,
    seconds_to_ms,
    ticks_to_ms,
)


@pytest.mark.parametrize("distance, speed, expected_ms", [
    (1500, 1500, 1000),
    (0, 1500, 0),
    (5000, 1500, 3333),
    (2000, 1500, 1333),
    (500, 1500, 333),
    (1, 1500, 1),       # 0.667 ms rounds up
    (0.75, 1500, 1),    # exactly 0.5 ms: half-up
])
def test_propagation_delay(distance, speed, expected_ms):
    assert propagation_delay(distance, speed) == expected_ms


def test_propagation_delay_rejects_non_positive_speed():
    with pytest.raises(ConfigError):
        propagation_delay(100, 0)
    with pytest.raises(ConfigError):
        propagation_delay(100, -1500)


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(1, 3000))
def test_propagation_delay_monotone(a, b, speed):
    lo, hi = sorted((a, b))
    assert propagation_delay(lo, speed) <= propagation_delay(hi, speed)


def test_pair_distance_examples():
    cfg = four_node_scenario()
    assert pair_distance(1, 2, cfg) == 500
    assert pair_distance(SINK, 3, cfg) == 3000
    assert pair_distance(2, 2, cfg) == 0


def test_pair_distance_unknown_node():
    with pytest.raises(ConfigError):
        pair_distance(1, 9, four_node_scenario())


positions = st.lists(st.integers(-5000, 5000), min_size=3, max_size=3)


@given(positions)
def test_pair_distance_is_a_line_metric(pos):
    cfg = ScenarioConfig(node_positions=((0, 0), (1, pos[0]), (2, pos[1]), (3, pos[2])),
                         max_range=10_000)
    for a in cfg.all_nodes:
        for b in cfg.all_nodes:
            assert pair_distance(a, b, cfg) == pair_distance(b, a, cfg)
            for c in cfg.all_nodes:
                assert pair_distance(a, c, cfg) <= pair_distance(a, b, cfg) + pair_distance(b, c, cfg)


@pytest.mark.parametrize("seconds", ["3.0", "7.0", "0.1", "38.9", "23.0"])
def test_tick_round_trip(seconds):
    ms = seconds_to_ms(seconds)
    assert ticks_to_ms(ms_to_ticks(ms)) == ms
    assert ms_to_ticks(ms) == round(Fraction(seconds) / Fraction("0.1"))


def test_ticks_reject_fractional():
    with pytest.raises(ValueError):
        ms_to_ticks(1333)
    assert ceil_ticks(1333) == 14
    assert ceil_ticks(1300) == 13


def test_format_seconds():
    assert format_seconds(19067) == "19.067"
    assert format_seconds(0) == "0.000"
    assert format_seconds(-50) == "-0.050"


def test_four_node_defaults():
    cfg = four_node_scenario()
    assert cfg.nodes == [1, 2, 3]
    assert cfg.control_frame_duration == 3000
    assert cfg.data_frame_duration == 7000
    assert cfg.nav_index_count == 390
    assert cfg.episodes == 10000


CONFIG_TEXT = """\
# four nodes
episodes = 10000
sink_location = 0
node1_location = 1500
node2_location = 2000
node3_location = 3000   # farthest
max_communication_range = 5000
q_table_depth = 390
control_frame_duration = 3.0
data_frame_duration = 7.0
acoustic_wave_speed = 1500
"""


def test_parse_config_matches_builtin():
    assert parse_config(CONFIG_TEXT) == four_node_scenario()


def test_config_round_trip(tmp_path):
    cfg = four_node_scenario(seed=9, epsilon_floor=0.1, contending_followers=True)
    path = tmp_path / "c.conf"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_shipped_config_loads():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1]
    assert load_config(root / "configs" / "four_node.conf") == four_node_scenario(seed=42)


@pytest.mark.parametrize("text, key, line", [
    ("episodes = 10\nbogus = 3\n", "bogus", 2),
    ("episodes = ten\n", "episodes", 1),
    ("node1_location = 9000\n", "node1_location", 1),
    ("acoustic_wave_speed = 0\nnode1_location = 10\n", "acoustic_wave_speed", 1),
    ("seed = 1\nseed = 2\n", "seed", 2),
])
def test_config_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == line
    assert key in str(info.value) and f"line {line}" in str(info.value)


def test_config_line_without_equals():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("episodes 10\n")


def test_sink_only_config_is_valid():
    cfg = parse_config("episodes = 5\n")
    assert cfg.nodes == []
