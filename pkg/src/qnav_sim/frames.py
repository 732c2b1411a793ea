"""MAC frames, the RTS/CTS/DATA/ACK exchange timeline and fixed max-delay NAVs."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    SINK,
    ConfigError,
    ScenarioConfig,
    Time,
    exact,
    format_seconds,
    in_range,
    max_propagation_seconds,
    pair_delay,
    seconds_to_ms,
)

# Gap between finishing a reception and starting the reply.
TURNAROUND_MS: Time = 0


class FrameKind(enum.Enum):
    RTS = "RTS"
    CTS = "CTS"
    DATA = "DATA"
    ACK = "ACK"

    @property
    def is_control(self) -> bool:
        return self is not FrameKind.DATA


def frame_duration(kind: FrameKind, cfg: ScenarioConfig) -> Time:
    return cfg.data_frame_duration if kind is FrameKind.DATA else cfg.control_frame_duration


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    src: int
    dst: int
    tx_start: Time
    tx_end: Time

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("frame source and destination must differ")
        if self.tx_end <= self.tx_start:
            raise ValueError("frame must have positive duration")

    @property
    def duration(self) -> Time:
        return self.tx_end - self.tx_start


@dataclass(frozen=True)
class Arrival:
    """A frame's reception window at one listener, half-open [start, end)."""

    frame: Frame
    node: int
    start: Time
    end: Time


@dataclass(frozen=True)
class ExchangeSchedule:
    initiator: int
    responder: int
    frames: tuple[Frame, ...]
    arrivals: tuple[Arrival, ...]
    channel_busy_end_at_sink: Time
    complete_at_initiator: Time

    def frame(self, kind: FrameKind) -> Frame:
        for f in self.frames:
            if f.kind is kind:
                return f
        raise KeyError(kind)

    def arrival(self, kind: FrameKind, node: int) -> Arrival | None:
        for a in self.arrivals:
            if a.frame.kind is kind and a.node == node:
                return a
        return None

    def arrivals_at(self, node: int) -> list[Arrival]:
        return [a for a in self.arrivals if a.node == node]

    def busy_intervals(self, node: int) -> list[tuple[Time, Time]]:
        """Every interval during which ``node`` transmits or receives a frame of this exchange."""
        spans = [(f.tx_start, f.tx_end) for f in self.frames if f.src == node]
        spans += [(a.start, a.end) for a in self.arrivals if a.node == node]
        return sorted(spans)

    def to_csv(self) -> str:
        """Timeline rows ``time,node,action,frame_kind,peer``, sorted by time."""
        rows = []
        for f in self.frames:
            rows.append((f.tx_start, f.src, "tx_start", f.kind.value, f.dst))
            rows.append((f.tx_end, f.src, "tx_end", f.kind.value, f.dst))
        for a in self.arrivals:
            rows.append((a.start, a.node, "rx_start", a.frame.kind.value, a.frame.src))
            rows.append((a.end, a.node, "rx_end", a.frame.kind.value, a.frame.src))
        order = {"rx_end": 0, "tx_end": 1, "tx_start": 2, "rx_start": 3}
        rows.sort(key=lambda r: (r[0], r[1], order[r[2]]))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", "node", "action", "frame_kind", "peer"])
        for t, node, action, kind, peer in rows:
            writer.writerow([format_seconds(t), node, action, kind, peer])
        return buf.getvalue()


def _nav_ms(seconds: Fraction) -> Time:
    if seconds < 0:
        raise ValueError("NAV components must be non-negative")
    return seconds_to_ms(seconds)


def baseline_nav_rts(prop, cts, data, ack) -> Time:
    """3*prop + CTS + DATA + ACK.

    Arguments are seconds (ints, floats, Fractions or decimal strings); the
    sum is formed exactly and rounded once to the millisecond.
    """
    prop, cts, data, ack = map(exact, (prop, cts, data, ack))
    if min(prop, cts, data, ack) < 0:
        raise ValueError("NAV components must be non-negative")
    return _nav_ms(3 * prop + cts + data + ack)


def baseline_nav_cts(prop, data, ack) -> Time:
    """2*prop + DATA + ACK, seconds in, milliseconds out."""
    prop, data, ack = map(exact, (prop, data, ack))
    if min(prop, data, ack) < 0:
        raise ValueError("NAV components must be non-negative")
    return _nav_ms(2 * prop + data + ack)


def scenario_baseline_nav(kind: FrameKind, cfg: ScenarioConfig) -> Time:
    """The fixed NAV every node sets on hearing ``kind``, using the max-range delay."""
    prop = max_propagation_seconds(cfg)
    ctrl = Fraction(cfg.control_frame_duration, 1000)
    data = Fraction(cfg.data_frame_duration, 1000)
    if kind is FrameKind.RTS:
        return baseline_nav_rts(prop, ctrl, data, ctrl)
    if kind is FrameKind.CTS:
        return baseline_nav_cts(prop, data, ctrl)
    raise ValueError(f"no NAV is set on {kind.value}")


def build_exchange(initiator: int, sink: int, start: Time, cfg: ScenarioConfig) -> ExchangeSchedule:
    """Lay out RTS, CTS, DATA and ACK with propagation-exact arrival windows.

    Each reply starts ``TURNAROUND_MS`` after the previous frame has fully
    arrived at the replier. Every node within ``cfg.max_range`` of a
    transmitter gets an arrival window for that frame.
    """
    if initiator == sink:
        raise ConfigError("initiator and sink must differ")
    cfg.position(initiator)
    cfg.position(sink)
    if not in_range(initiator, sink, cfg):
        raise ConfigError(f"node {initiator} is out of range of node {sink}")

    delay = pair_delay(initiator, sink, cfg)
    ctrl = cfg.control_frame_duration
    data = cfg.data_frame_duration

    frames = []
    t = start
    for kind, src, dst, length in (
        (FrameKind.RTS, initiator, sink, ctrl),
        (FrameKind.CTS, sink, initiator, ctrl),
        (FrameKind.DATA, initiator, sink, data),
        (FrameKind.ACK, sink, initiator, ctrl),
    ):
        frames.append(Frame(kind, src, dst, t, t + length))
        t = t + length + delay + TURNAROUND_MS

    arrivals = []
    for f in frames:
        for node in cfg.all_nodes:
            if node == f.src or not in_range(f.src, node, cfg):
                continue
            d = pair_delay(f.src, node, cfg)
            arrivals.append(Arrival(f, node, f.tx_start + d, f.tx_end + d))

    sink_end = max(end for _, end in _intervals_for(sink, frames, arrivals))
    ack = frames[-1]
    return ExchangeSchedule(
        initiator=initiator,
        responder=sink,
        frames=tuple(frames),
        arrivals=tuple(arrivals),
        channel_busy_end_at_sink=sink_end,
        complete_at_initiator=ack.tx_end + delay,
    )


def _intervals_for(node, frames, arrivals):
    for f in frames:
        if f.src == node:
            yield f.tx_start, f.tx_end
    for a in arrivals:
        if a.node == node:
            yield a.start, a.end


def primary_exchange(initiator: int, cfg: ScenarioConfig, start: Time = 0) -> ExchangeSchedule:
    return build_exchange(initiator, SINK, start, cfg)
