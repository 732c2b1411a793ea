"""Q-NAV: per-peer reward tables with epsilon-scheduled NAV selection.

Each node keeps one integer reward row per possible overheard transmitter.
On overhearing an RTS or CTS it either draws a random NAV index or takes
the lowest index whose reward is positive, waits that many ticks, tries
to seize the channel, and adds +1 or -1 to the chosen entry.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import SINK, TICK_MS, ScenarioConfig, Time
from .frames import FrameKind, scenario_baseline_nav

RANDOM = "random"
GREEDY = "greedy"


@dataclass
class EpsilonState:
    threshold: int = 6000
    floor: float = 0.05
    decay: float = 0.999
    e: float = 1.0


def epsilon_update(state: EpsilonState, receive_count: int) -> float:
    """1 up to ``threshold`` receptions, then ``decay**(count - threshold)`` clamped at ``floor``."""
    if receive_count < 0:
        raise ValueError("receive_count must be non-negative")
    if receive_count <= state.threshold:
        e = 1.0
    else:
        e = max(state.floor, state.decay ** (receive_count - state.threshold))
    state.e = e
    return e


@dataclass(frozen=True)
class NavDecision:
    nav_index: int
    branch: str
    nav_duration: Time
    peer: int = -1

    @classmethod
    def at_index(cls, index: int, branch: str, peer: int = -1) -> "NavDecision":
        return cls(index, branch, index * TICK_MS, peer)


def lowest_positive_index(row) -> int | None:
    hits = np.flatnonzero(np.asarray(row) > 0)
    return int(hits[0]) if hits.size else None


def select_nav(row, e: float, rng: np.random.Generator, limit: int | None = None,
               peer: int = -1) -> NavDecision:
    """Pick a NAV index from one reward row.

    With probability ``e`` draw uniformly from ``[0, limit]`` (the whole row
    when ``limit`` is None); otherwise take the lowest positive entry. A row
    with no positive entry falls back to a random draw.
    """
    n = len(row)
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"epsilon {e} outside [0, 1]")
    hi = n - 1 if limit is None else min(limit, n - 1)
    explore = e >= 1.0 or (e > 0.0 and rng.random() < e)
    if not explore:
        lpv = lowest_positive_index(row)
        if lpv is not None:
            return NavDecision.at_index(lpv, GREEDY, peer)
    return NavDecision.at_index(int(rng.integers(0, hi + 1)), RANDOM, peer)


class QTable:
    """Reward rows of one learner, one row per other node (sink included)."""

    def __init__(self, learner: int, peers, nav_index_count: int):
        self.learner = learner
        self.peers = [p for p in sorted(peers) if p != learner]
        self.nav_index_count = nav_index_count
        self._row_of = {p: i for i, p in enumerate(self.peers)}
        self.rewards = np.zeros((len(self.peers), nav_index_count), dtype=np.int64)
        self.receive_count = 0

    def row(self, peer: int) -> np.ndarray:
        return self.rewards[self._row_of[peer]]

    def has_peer(self, peer: int) -> bool:
        return peer in self._row_of

    def greedy_index(self, peer: int) -> int | None:
        return lowest_positive_index(self.row(peer))


def reward_update(table: QTable, peer: int, nav_index: int, success: bool) -> None:
    if peer not in table._row_of:
        raise IndexError(f"node {table.learner} has no row for peer {peer}")
    if not 0 <= nav_index < table.nav_index_count:
        raise IndexError(f"NAV index {nav_index} outside [0, {table.nav_index_count})")
    table.rewards[table._row_of[peer], nav_index] += 1 if success else -1


def random_nav_limit(kind: FrameKind, cfg: ScenarioConfig) -> int:
    """Highest index a random draw may return after hearing ``kind``."""
    top = cfg.nav_index_count - 1
    if cfg.random_nav_bound == "table":
        return top
    return min(top, scenario_baseline_nav(kind, cfg) // TICK_MS)


def on_overheard_frame(table: QTable, peer: int, e_state: EpsilonState,
                       rng: np.random.Generator, limit: int | None = None) -> NavDecision:
    """Count the reception, refresh epsilon and choose a NAV for ``peer``'s row."""
    table.receive_count += 1
    e = epsilon_update(e_state, table.receive_count)
    return select_nav(table.row(peer), e, rng, limit, peer)


@dataclass
class QNavPolicy:
    """All learners of a scenario, each with its own table, epsilon and RNG stream."""

    cfg: ScenarioConfig
    tables: dict[int, QTable] = field(default_factory=dict)
    epsilon: dict[int, EpsilonState] = field(default_factory=dict)
    rngs: dict[int, np.random.Generator] = field(default_factory=dict)
    learning: bool = True

    name = "qnav"

    @classmethod
    def fresh(cls, cfg: ScenarioConfig, seed_seq: np.random.SeedSequence) -> "QNavPolicy":
        nodes = cfg.nodes
        children = seed_seq.spawn(len(nodes))
        policy = cls(cfg)
        for node, child in zip(nodes, children):
            policy.tables[node] = QTable(node, cfg.all_nodes, cfg.nav_index_count)
            policy.epsilon[node] = EpsilonState(cfg.epsilon_threshold, cfg.epsilon_floor,
                                                cfg.epsilon_decay)
            policy.rngs[node] = np.random.default_rng(child)
        return policy

    def observe(self, learner: int) -> None:
        """An overheard RTS/CTS that does not lead to a decision still counts."""
        table = self.tables[learner]
        table.receive_count += 1
        epsilon_update(self.epsilon[learner], table.receive_count)

    def decide(self, learner: int, frame) -> NavDecision:
        limit = random_nav_limit(frame.kind, self.cfg)
        return on_overheard_frame(self.tables[learner], frame.src, self.epsilon[learner],
                                  self.rngs[learner], limit)

    def feedback(self, learner: int, decision: NavDecision, success: bool) -> None:
        if self.learning:
            reward_update(self.tables[learner], decision.peer, decision.nav_index, success)


def rewards_to_csv(tables: dict[int, QTable], full: bool = False) -> str:
    """``learner,peer,nav_index,reward`` rows.

    The sparse form keeps nonzero entries plus the first and last index of
    every row, so the table shape survives an all-zero run.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["learner", "peer", "nav_index", "reward"])
    for learner in sorted(tables):
        table = tables[learner]
        last = table.nav_index_count - 1
        for peer in table.peers:
            row = table.row(peer)
            if full:
                indices = range(table.nav_index_count)
            else:
                indices = sorted({0, last, *np.flatnonzero(row).tolist()})
            for i in indices:
                writer.writerow([learner, peer, i, int(row[i])])
    return buf.getvalue()


def peer_label(node: int) -> str:
    return "sink" if node == SINK else f"node{node}"
