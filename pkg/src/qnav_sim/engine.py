"""Discrete-event loop for primary exchanges with NAV-waiting followers.

An episode is one RTS/CTS/DATA/ACK exchange between an initiator and the
sink. Every other sensor node has data pending: it overhears the exchange,
sets a NAV through the active policy, sends its own RTS the moment the NAV
expires, and is scored by whether that RTS reaches an idle sink.
"""

from __future__ import annotations

import csv
import enum
import heapq
import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .core import SINK, ScenarioConfig, Time, ceil_ticks, format_seconds, in_range, pair_delay
from .frames import (
    Arrival,
    ExchangeSchedule,
    Frame,
    FrameKind,
    build_exchange,
    scenario_baseline_nav,
)
from .policy import NavDecision, QNavPolicy, QTable


class EventKind(enum.IntEnum):
    # Value is the tie-break rank at equal (time, node): a reception that
    # ends at t frees the node to transmit at t.
    RX_END = 0
    TX_END = 1
    NAV_EXPIRY = 2
    TX_START = 3
    RX_START = 4
    EPISODE_END = 5


@dataclass(frozen=True)
class Event:
    time: Time
    node: int
    kind: EventKind
    payload: object = None


class EventQueue:
    """Min-heap ordered by (time, node, kind, insertion sequence)."""

    def __init__(self):
        self._heap = []
        self._seq = 0
        self.now: Time = 0

    def __len__(self):
        return len(self._heap)

    def push(self, time: Time, node: int, kind: EventKind, payload=None) -> Event:
        if time < self.now:
            raise ValueError(f"event at {time} ms scheduled in the past (now {self.now} ms)")
        ev = Event(time, node, kind, payload)
        heapq.heappush(self._heap, (time, node, int(kind), self._seq, ev))
        self._seq += 1
        return ev

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)[-1]
        self.now = ev.time
        return ev


@dataclass(frozen=True)
class Episode:
    index: int
    initiator: int
    followers: frozenset
    start: Time = 0

    def __post_init__(self):
        if self.initiator == SINK:
            raise ValueError("the sink cannot initiate an exchange")
        if self.initiator in self.followers or SINK in self.followers:
            raise ValueError("followers exclude the initiator and the sink")


@dataclass(frozen=True)
class ExchangeTrace:
    episode: int
    follower: int
    peer_row: int
    nav_index: int
    branch: str
    ret: Time
    let: Time
    success: bool
    nav_duration: Time = 0

    def csv_row(self) -> list:
        return [self.episode, self.follower, self.peer_row, self.nav_index, self.branch,
                format_seconds(self.ret), format_seconds(self.let), int(self.success)]


TRACE_HEADER = ["episode", "follower", "peer", "nav_index", "branch", "ret", "let", "success"]


def traces_to_csv(traces: Iterable[ExchangeTrace]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t in traces:
        writer.writerow(t.csv_row())
    return buf.getvalue()


def _overlap(a: tuple[Time, Time], b: tuple[Time, Time]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def failure_rule(follower_rts_arrival: tuple[Time, Time], sink_busy: tuple[Time, Time],
                 follower_local_busy: bool, others: Iterable[tuple[Time, Time]] = ()) -> bool:
    """True when the follower's RTS gets through.

    Fails if the follower was busy receiving when it keyed up, if its first
    bit reaches the sink before the sink's busy period ends, or if it
    overlaps another arrival at the sink.
    """
    if follower_local_busy:
        return False
    if follower_rts_arrival[0] < sink_busy[1]:
        return False
    return not any(_overlap(follower_rts_arrival, o) for o in others)


# --- policies -----------------------------------------------------------------

class FixedNavPolicy:
    """Max-propagation NAV for everyone, whatever the distances."""

    name = "baseline"

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self._nav = {k: scenario_baseline_nav(k, cfg) for k in (FrameKind.RTS, FrameKind.CTS)}

    def decide(self, learner: int, frame: Frame) -> NavDecision:
        duration = self._nav[frame.kind]
        return NavDecision(ceil_ticks(duration), "baseline", duration, frame.src)

    def observe(self, learner: int) -> None:
        pass

    def feedback(self, learner: int, decision: NavDecision, success: bool) -> None:
        pass


class ForcedNavPolicy:
    """Always answers with one fixed NAV; used for replays."""

    name = "forced"

    def __init__(self, nav_index: int | None = None, duration: Time | None = None):
        if duration is None:
            duration = nav_index * 100
            self._decision = NavDecision.at_index(nav_index, "forced")
        else:
            self._decision = NavDecision(ceil_ticks(duration) if nav_index is None else nav_index,
                                         "forced", duration)

    def decide(self, learner: int, frame: Frame) -> NavDecision:
        d = self._decision
        return NavDecision(d.nav_index, d.branch, d.nav_duration, frame.src)

    def observe(self, learner: int) -> None:
        pass

    def feedback(self, learner: int, decision: NavDecision, success: bool) -> None:
        pass


class OracleNavPolicy:
    """Uses the brute-force minimum succeeding NAV for every (follower, initiator)."""

    name = "oracle"

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg

    def decide(self, learner: int, frame: Frame) -> NavDecision:
        initiator = frame.src if frame.kind is FrameKind.RTS else frame.dst
        index = oracle_min_nav(learner, initiator, self.cfg)
        if index is None:
            index = self.cfg.nav_index_count - 1
        return NavDecision.at_index(index, "oracle", frame.src)

    def observe(self, learner: int) -> None:
        pass

    def feedback(self, learner: int, decision: NavDecision, success: bool) -> None:
        pass


# --- the episode ----------------------------------------------------------------

@dataclass
class EpisodeResult:
    traces: list[ExchangeTrace]
    primary_ok: bool
    schedule: ExchangeSchedule


def _is_primary_control(frame: Frame, sched: ExchangeSchedule) -> bool:
    return frame.kind in (FrameKind.RTS, FrameKind.CTS) and frame in sched.frames


def simulate_episode(ep: Episode, policy, cfg: ScenarioConfig,
                     on_event: Callable[[Event], None] | None = None,
                     schedule: ExchangeSchedule | None = None) -> EpisodeResult:
    if schedule is None or schedule.frames[0].tx_start != ep.start:
        schedule = build_exchange(ep.initiator, SINK, ep.start, cfg)
    sched = schedule
    q = EventQueue()
    q.now = ep.start
    for f in sched.frames:
        q.push(f.tx_start, f.src, EventKind.TX_START, f)
        q.push(f.tx_end, f.src, EventKind.TX_END, f)
    for a in sched.arrivals:
        q.push(a.start, a.node, EventKind.RX_START, a)
        q.push(a.end, a.node, EventKind.RX_END, a)

    receiving: dict[int, list[Arrival]] = {}
    decisions: dict[int, NavDecision] = {}
    local_busy: dict[int, bool] = {}
    at_sink: dict[int, tuple[Time, Time]] = {}
    last = ep.start

    while q:
        ev = q.pop()
        last = ev.time
        if on_event is not None:
            on_event(ev)
        node = ev.node
        if ev.kind is EventKind.RX_START:
            arrival = ev.payload
            receiving.setdefault(node, []).append(arrival)
            if node == SINK and arrival.frame.src in decisions and arrival.frame not in sched.frames:
                at_sink[arrival.frame.src] = (arrival.start, arrival.end)
        elif ev.kind is EventKind.RX_END:
            arrival = ev.payload
            receiving[node].remove(arrival)
            frame = arrival.frame
            if node == SINK or frame.dst == node or not _is_primary_control(frame, sched):
                continue
            if node in ep.followers and node not in decisions:
                decision = policy.decide(node, frame)
                decisions[node] = decision
                q.push(ev.time + decision.nav_duration, node, EventKind.NAV_EXPIRY, decision)
            else:
                policy.observe(node)
        elif ev.kind is EventKind.NAV_EXPIRY:
            rts = Frame(FrameKind.RTS, node, SINK, ev.time, ev.time + cfg.control_frame_duration)
            q.push(rts.tx_start, node, EventKind.TX_START, rts)
            q.push(rts.tx_end, node, EventKind.TX_END, rts)
            listeners = cfg.all_nodes if cfg.contending_followers else [SINK]
            for other in listeners:
                if other == node or not in_range(node, other, cfg):
                    continue
                d = pair_delay(node, other, cfg)
                a = Arrival(rts, other, rts.tx_start + d, rts.tx_end + d)
                q.push(a.start, other, EventKind.RX_START, a)
                q.push(a.end, other, EventKind.RX_END, a)
        elif ev.kind is EventKind.TX_START:
            frame = ev.payload
            if node in decisions and frame not in sched.frames:
                active = receiving.get(node, [])
                if not cfg.strict_half_duplex:
                    active = [a for a in active if a.frame.dst == node]
                local_busy[node] = bool(active)

    if on_event is not None:
        on_event(Event(last, SINK, EventKind.EPISODE_END, ep))

    busy = (sched.busy_intervals(SINK)[0][0], sched.channel_busy_end_at_sink)
    ret = sched.channel_busy_end_at_sink - ep.start
    traces = []
    for follower in sorted(decisions):
        decision = decisions[follower]
        arrival = at_sink[follower]
        others = [at_sink[g] for g in sorted(at_sink) if g != follower] if cfg.contending_followers else []
        success = failure_rule(arrival, busy, local_busy[follower], others)
        policy.feedback(follower, decision, success)
        traces.append(ExchangeTrace(ep.index, follower, decision.peer, decision.nav_index,
                                    decision.branch, ret, arrival[0] - ep.start, success,
                                    decision.nav_duration))

    sink_spans = sched.busy_intervals(SINK)
    primary_ok = cfg.protect_primary or not any(
        _overlap(span, at_sink[f]) for f in at_sink for span in sink_spans)
    return EpisodeResult(traces, primary_ok, sched)


def run_episode(ep: Episode, policy, cfg: ScenarioConfig,
                on_event: Callable[[Event], None] | None = None) -> list[ExchangeTrace]:
    return simulate_episode(ep, policy, cfg, on_event).traces


# --- training -------------------------------------------------------------------

@dataclass
class TrainingResult:
    tables: dict[int, QTable]
    traces: list[ExchangeTrace]
    policy: object
    primary_corrupted: int = 0
    episodes: list[Episode] = field(default_factory=list)

    def __iter__(self):
        yield self.tables
        yield self.traces


def episode_stream(cfg: ScenarioConfig, rng: np.random.Generator):
    """Seeded episodes: uniform initiator, every other sensor node follows."""
    nodes = cfg.nodes
    if not nodes:
        return
    for index in range(cfg.episodes):
        initiator = nodes[int(rng.integers(len(nodes)))]
        yield Episode(index, initiator, frozenset(n for n in nodes if n != initiator))


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.SeedSequence]:
    episodes_seq, policy_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(episodes_seq), policy_seq


def make_policy(kind: str, cfg: ScenarioConfig, policy_seq: np.random.SeedSequence):
    if kind == "qnav":
        return QNavPolicy.fresh(cfg, policy_seq)
    if kind == "baseline":
        return FixedNavPolicy(cfg)
    if kind == "oracle":
        return OracleNavPolicy(cfg)
    raise ValueError(f"unknown policy {kind!r}")


def run_training(cfg: ScenarioConfig, policy: str = "qnav") -> TrainingResult:
    """Run ``cfg.episodes`` episodes from ``cfg.seed``; tables are those of the Q-NAV learners."""
    ep_rng, policy_seq = seed_streams(cfg.seed)
    pol = make_policy(policy, cfg, policy_seq)
    schedules = {n: build_exchange(n, SINK, 0, cfg) for n in cfg.nodes}
    traces: list[ExchangeTrace] = []
    corrupted = 0
    episodes = []
    for ep in episode_stream(cfg, ep_rng):
        episodes.append(ep)
        result = simulate_episode(ep, pol, cfg, schedule=schedules[ep.initiator])
        traces.extend(result.traces)
        corrupted += not result.primary_ok
    if isinstance(pol, QNavPolicy):
        tables = pol.tables
    else:
        tables = {n: QTable(n, cfg.all_nodes, cfg.nav_index_count) for n in cfg.nodes}
    return TrainingResult(tables, traces, pol, corrupted, episodes)


# --- oracle ---------------------------------------------------------------------

def replay(follower: int, initiator: int, cfg: ScenarioConfig, nav_index: int | None = None,
           duration: Time | None = None) -> ExchangeTrace | None:
    """One isolated exchange where ``follower`` waits a forced NAV."""
    ep = Episode(0, initiator, frozenset([follower]))
    traces = run_episode(ep, ForcedNavPolicy(nav_index, duration), cfg)
    return traces[0] if traces else None


@lru_cache(maxsize=4096)
def oracle_min_nav(follower: int, initiator: int, cfg: ScenarioConfig) -> int | None:
    """Smallest NAV index whose replay succeeds, or None when no index in range does."""
    if follower == initiator:
        raise ValueError("follower and initiator must differ")
    if follower == SINK or initiator == SINK:
        raise ValueError("the sink is neither a follower nor an initiator")
    for index in range(cfg.nav_index_count):
        trace = replay(follower, initiator, cfg, nav_index=index)
        if trace is None:
            return None
        if trace.success:
            return index
    return None


def decision_peer(follower: int, initiator: int, cfg: ScenarioConfig) -> int | None:
    """Row a follower trains when reacting to ``initiator``'s exchange."""
    if in_range(follower, initiator, cfg):
        return initiator
    if in_range(follower, SINK, cfg):
        return SINK
    return None


def row_oracle(learner: int, peer: int, cfg: ScenarioConfig) -> int | None:
    """Oracle for one reward row.

    A sink row collects every exchange whose RTS the learner missed, so its
    target is the largest per-initiator minimum among those.
    """
    initiators = [i for i in cfg.nodes if i != learner and decision_peer(learner, i, cfg) == peer]
    if not initiators:
        return None
    values = [oracle_min_nav(learner, i, cfg) for i in initiators]
    if any(v is None for v in values):
        return None
    return max(values)
