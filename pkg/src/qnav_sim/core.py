"""Time base, scenario configuration and line-topology geometry.

All times are integer milliseconds. A NAV "tick" is 100 ms; ticks only
quantize NAV indices, everything else runs at millisecond resolution.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from pathlib import Path
from typing import Mapping

MS_PER_SECOND = 1000
TICK_MS = 100
SINK = 0

Time = int  # milliseconds


class ConfigError(ValueError):
    """Invalid scenario configuration."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


def exact(value) -> Fraction:
    """Exact rational for ints, Fractions, decimal strings and floats.

    Floats go through their shortest repr so 0.1 means one tenth.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, Real):
        return Fraction(value)
    raise TypeError(f"not a real number: {value!r}")


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def seconds_to_ms(seconds) -> Time:
    """Seconds to milliseconds, round-half-up at 1 ms."""
    return round_half_up(exact(seconds) * MS_PER_SECOND)


def ms_to_seconds(ms: Time) -> float:
    return ms / MS_PER_SECOND


def ms_to_ticks(ms: Time) -> int:
    if ms % TICK_MS:
        raise ValueError(f"{ms} ms is not a whole number of ticks")
    return ms // TICK_MS


def ticks_to_ms(ticks: int) -> Time:
    return ticks * TICK_MS


def ceil_ticks(ms: Time) -> int:
    return -(-ms // TICK_MS)


def format_seconds(ms: Time) -> str:
    """Deterministic fixed-point rendering, e.g. 19067 -> '19.067'."""
    sign = "-" if ms < 0 else ""
    ms = abs(ms)
    return f"{sign}{ms // MS_PER_SECOND}.{ms % MS_PER_SECOND:03d}"


def propagation_seconds(distance_m, sound_speed) -> Fraction:
    """Exact one-way delay in seconds as a rational."""
    d = exact(distance_m)
    c = exact(sound_speed)
    if c <= 0:
        raise ConfigError("sound speed must be positive", key="acoustic_wave_speed")
    if d < 0:
        raise ValueError(f"negative distance {distance_m}")
    return d / c


def propagation_delay(distance_m, sound_speed) -> Time:
    """One-way acoustic delay rounded half-up to the nearest millisecond.

    >>> propagation_delay(5000, 1500)
    3333
    """
    return seconds_to_ms(propagation_seconds(distance_m, sound_speed))


@dataclass(frozen=True)
class ScenarioConfig:
    node_positions: tuple[tuple[int, Fraction], ...]
    max_range: Fraction = Fraction(5000)
    sound_speed: Fraction = Fraction(1500)
    control_frame_duration: Time = 3000
    data_frame_duration: Time = 7000
    episodes: int = 10000
    nav_index_count: int = 390
    epsilon_threshold: int = 6000
    epsilon_decay: float = 0.999
    epsilon_floor: float = 0.05
    seed: int = 0
    # "baseline": random NAV draws never exceed the max-propagation NAV;
    # "table": draws span the whole index range.
    random_nav_bound: str = "baseline"
    contending_followers: bool = False
    strict_half_duplex: bool = False
    protect_primary: bool = True
    _positions: Mapping[int, Fraction] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        positions = {}
        for node, pos in self.node_positions:
            if node in positions:
                raise ConfigError(f"duplicate node id {node}")
            positions[node] = exact(pos)
        object.__setattr__(self, "node_positions",
                           tuple(sorted((n, p) for n, p in positions.items())))
        object.__setattr__(self, "_positions", positions)
        object.__setattr__(self, "max_range", exact(self.max_range))
        object.__setattr__(self, "sound_speed", exact(self.sound_speed))
        self.validate()

    def validate(self) -> None:
        if SINK not in self._positions:
            raise ConfigError("sink (node 0) must be present", key="sink_location")
        if self.sound_speed <= 0:
            raise ConfigError("must be positive", key="acoustic_wave_speed")
        if self.max_range <= 0:
            raise ConfigError("must be positive", key="max_communication_range")
        if self.control_frame_duration <= 0:
            raise ConfigError("must be positive", key="control_frame_duration")
        if self.data_frame_duration <= 0:
            raise ConfigError("must be positive", key="data_frame_duration")
        if self.episodes < 0:
            raise ConfigError("must be non-negative", key="episodes")
        if self.nav_index_count <= 0:
            raise ConfigError("must be positive", key="q_table_depth")
        if self.epsilon_threshold < 0:
            raise ConfigError("must be non-negative", key="epsilon_threshold")
        if not 0.0 <= self.epsilon_floor <= 1.0:
            raise ConfigError("must lie in [0, 1]", key="epsilon_floor")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError("must lie in (0, 1]", key="epsilon_decay")
        if self.random_nav_bound not in ("baseline", "table"):
            raise ConfigError("must be 'baseline' or 'table'", key="random_nav_bound")
        sink_pos = self._positions[SINK]
        for node, pos in self._positions.items():
            if node < 0:
                raise ConfigError(f"node id {node} is negative")
            if abs(pos - sink_pos) > self.max_range:
                raise ConfigError(f"node {node} at {pos} m is beyond max range {self.max_range} m",
                                  key=f"node{node}_location")

    @property
    def nodes(self) -> list[int]:
        """Non-sink node ids in ascending order."""
        return [n for n, _ in self.node_positions if n != SINK]

    @property
    def all_nodes(self) -> list[int]:
        return [n for n, _ in self.node_positions]

    def position(self, node: int) -> Fraction:
        try:
            return self._positions[node]
        except KeyError:
            raise ConfigError(f"unknown node id {node}") from None

    def replace(self, **changes) -> "ScenarioConfig":
        changes.setdefault("node_positions", self.node_positions)
        return dataclasses.replace(self, **changes)


def four_node_scenario(**overrides) -> ScenarioConfig:
    """Sink at 0 m and three sensors at 1500/2000/3000 m, 1500 m/s, 3 s control, 7 s data."""
    base = dict(node_positions=((0, 0), (1, 1500), (2, 2000), (3, 3000)))
    base.update(overrides)
    return ScenarioConfig(**base)


def pair_distance(a: int, b: int, cfg: ScenarioConfig) -> Fraction:
    return abs(cfg.position(a) - cfg.position(b))


def pair_delay(a: int, b: int, cfg: ScenarioConfig) -> Time:
    return propagation_delay(pair_distance(a, b, cfg), cfg.sound_speed)


def in_range(a: int, b: int, cfg: ScenarioConfig) -> bool:
    return pair_distance(a, b, cfg) <= cfg.max_range


def max_propagation_seconds(cfg: ScenarioConfig) -> Fraction:
    return propagation_seconds(cfg.max_range, cfg.sound_speed)


# --- flat key = value config files -------------------------------------------

_SCALAR_KEYS = {
    "episodes": ("episodes", int),
    "max_communication_range": ("max_range", exact),
    "acoustic_wave_speed": ("sound_speed", exact),
    "control_frame_duration": ("control_frame_duration", seconds_to_ms),
    "data_frame_duration": ("data_frame_duration", seconds_to_ms),
    "q_table_depth": ("nav_index_count", int),
    "epsilon_threshold": ("epsilon_threshold", int),
    "epsilon_decay": ("epsilon_decay", float),
    "epsilon_floor": ("epsilon_floor", float),
    "seed": ("seed", int),
    "random_nav_bound": ("random_nav_bound", str),
    "contending_followers": ("contending_followers", "bool"),
    "strict_half_duplex": ("strict_half_duplex", "bool"),
    "protect_primary": ("protect_primary", "bool"),
}


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _node_key(key: str) -> int | None:
    if key == "sink_location" or key == "sinknode_location":
        return SINK
    if key.startswith("node") and key.endswith("_location"):
        digits = key[len("node"):-len("_location")]
        if digits.isdigit() and int(digits) > 0:
            return int(digits)
    return None


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    kwargs: dict = {}
    positions: dict[int, Fraction] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not value:
            raise ConfigError("missing value", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first on line {seen[key]})", key=key, line=lineno)
        seen[key] = lineno
        node = _node_key(key)
        try:
            if node is not None:
                positions[node] = exact(value)
            elif key in _SCALAR_KEYS:
                name, conv = _SCALAR_KEYS[key]
                kwargs[name] = _parse_bool(value) if conv == "bool" else conv(value)
            else:
                raise ConfigError("unknown key", key=key, line=lineno)
        except ConfigError:
            raise
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value {value!r} ({exc})", key=key, line=lineno) from None
    positions.setdefault(SINK, Fraction(0))
    try:
        return ScenarioConfig(node_positions=tuple(positions.items()), **kwargs)
    except ConfigError as exc:
        if exc.key in seen and exc.line is None:
            raise ConfigError(str(exc).split(": ", 1)[-1], key=exc.key, line=seen[exc.key]) from None
        raise


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def _fmt_number(x) -> str:
    x = exact(x)
    if x.denominator == 1:
        return str(x.numerator)
    return str(x)


def dump_config(cfg: ScenarioConfig) -> str:
    """Render a config back into the flat file format; round-trips through parse_config."""
    lines = ["episodes = %d" % cfg.episodes]
    for node, pos in cfg.node_positions:
        key = "sink_location" if node == SINK else f"node{node}_location"
        lines.append(f"{key} = {_fmt_number(pos)}")
    lines += [
        f"max_communication_range = {_fmt_number(cfg.max_range)}",
        f"q_table_depth = {cfg.nav_index_count}",
        f"control_frame_duration = {format_seconds(cfg.control_frame_duration)}",
        f"data_frame_duration = {format_seconds(cfg.data_frame_duration)}",
        f"acoustic_wave_speed = {_fmt_number(cfg.sound_speed)}",
        f"epsilon_threshold = {cfg.epsilon_threshold}",
        f"epsilon_decay = {cfg.epsilon_decay!r}",
        f"epsilon_floor = {cfg.epsilon_floor!r}",
        f"seed = {cfg.seed}",
        f"random_nav_bound = {cfg.random_nav_bound}",
        f"contending_followers = {str(cfg.contending_followers).lower()}",
        f"strict_half_duplex = {str(cfg.strict_half_duplex).lower()}",
        f"protect_primary = {str(cfg.protect_primary).lower()}",
    ]
    return "\n".join(lines) + "\n"
