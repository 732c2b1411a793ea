"""Policy runs, per-pair summaries, reward curves and baseline comparisons."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    TICK_MS,
    ConfigError,
    ScenarioConfig,
    Time,
    dump_config,
    format_seconds,
    load_config,
)
from .engine import (
    ExchangeTrace,
    decision_peer,
    oracle_min_nav,
    replay,
    run_training,
    traces_to_csv,
)
from .frames import FrameKind, scenario_baseline_nav
from .policy import rewards_to_csv

POLICIES = ("baseline", "qnav", "oracle")

# Published reference values for the 4-node scenario; printed next to our
# own numbers, never used in place of them.
REPORTED_BASELINE_NAV: Time = 38900
REPORTED_SAVING_FRACTION = 0.175
REPORTED_BOUNDARY_INDEX = 276
REPORTED_RET: Time = 32000


def _fmt_time(ms: Time | None) -> str:
    return "NA" if ms is None else format_seconds(ms)


def _fmt_ratio(x: float | None) -> str:
    return "NA" if x is None else f"{x:.6f}"


@dataclass(frozen=True)
class PairSummary:
    follower: int
    initiator: int
    peer: int
    baseline_nav: Time
    learned_nav: Time | None
    oracle_nav: Time | None
    ret: Time | None
    let: Time | None
    success: bool
    flag: str = ""

    @property
    def saving_fraction(self) -> float | None:
        if self.learned_nav is None or self.baseline_nav <= 0:
            return None
        return (self.baseline_nav - self.learned_nav) / self.baseline_nav

    @property
    def reported_saving_fraction(self) -> float | None:
        """How far this follower's arrival lands before the reported 38.9 s NAV."""
        if self.let is None:
            return None
        return (REPORTED_BASELINE_NAV - self.let) / REPORTED_BASELINE_NAV


SUMMARY_HEADER = ["follower", "initiator", "peer", "baseline_nav", "learned_nav", "oracle_nav",
                  "ret", "let", "success", "saving_fraction", "reported_baseline_nav",
                  "reported_saving_fraction", "flag"]


@dataclass
class SummaryReport:
    policy: str
    cfg: ScenarioConfig
    rows: list[PairSummary] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.cfg.seed

    def pair(self, follower: int, initiator: int) -> PairSummary:
        for r in self.rows:
            if r.follower == follower and r.initiator == initiator:
                return r
        raise KeyError((follower, initiator))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["policy", "seed", *SUMMARY_HEADER])
        for r in self.rows:
            writer.writerow([
                self.policy, self.seed, r.follower, r.initiator, r.peer,
                _fmt_time(r.baseline_nav), _fmt_time(r.learned_nav), _fmt_time(r.oracle_nav),
                _fmt_time(r.ret), _fmt_time(r.let), int(r.success),
                _fmt_ratio(r.saving_fraction), _fmt_time(REPORTED_BASELINE_NAV),
                _fmt_ratio(r.reported_saving_fraction), r.flag,
            ])
        return buf.getvalue()

    def format_table(self) -> str:
        header = ["follower", "initiator", "baseline", "learned", "oracle", "RET", "LET",
                  "saving", "vs 38.9s", "flag"]
        lines = [f"policy={self.policy} seed={self.seed} episodes={self.cfg.episodes}"]
        body = []
        for r in self.rows:
            body.append([
                str(r.follower), str(r.initiator), _fmt_time(r.baseline_nav),
                _fmt_time(r.learned_nav), _fmt_time(r.oracle_nav), _fmt_time(r.ret),
                _fmt_time(r.let),
                "NA" if r.saving_fraction is None else f"{100 * r.saving_fraction:.1f}%",
                "NA" if r.reported_saving_fraction is None
                else f"{100 * r.reported_saving_fraction:.1f}%",
                r.flag or "-",
            ])
        widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
                  for i, h in enumerate(header)]
        lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        for row in body:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        lines.append(f"(reported reference: baseline NAV {format_seconds(REPORTED_BASELINE_NAV)} s, "
                     f"saving {100 * REPORTED_SAVING_FRACTION:.1f}%; not derived from this model)")
        return "\n".join(lines)


def pairs(cfg: ScenarioConfig) -> list[tuple[int, int]]:
    return [(f, i) for f in cfg.nodes for i in cfg.nodes if f != i]


def learned_index(policy: str, tables, follower: int, initiator: int, cfg: ScenarioConfig):
    peer = decision_peer(follower, initiator, cfg)
    if policy == "qnav":
        return tables[follower].greedy_index(peer)
    if policy == "oracle":
        return oracle_min_nav(follower, initiator, cfg)
    raise ValueError(policy)


def summarize(policy: str, cfg: ScenarioConfig, tables) -> SummaryReport:
    """Evaluate the NAV each follower would now use, one isolated replay per pair."""
    report = SummaryReport(policy, cfg)
    for follower, initiator in pairs(cfg):
        peer = decision_peer(follower, initiator, cfg)
        if peer is None:
            continue
        kind = FrameKind.RTS if peer == initiator else FrameKind.CTS
        baseline = scenario_baseline_nav(kind, cfg)
        oracle = oracle_min_nav(follower, initiator, cfg)
        flags = []
        if oracle is None:
            flags.append("unreachable")
        if policy == "baseline":
            learned = baseline
        else:
            index = learned_index(policy, tables, follower, initiator, cfg)
            learned = None if index is None else index * TICK_MS
            if index is None:
                flags.append("untrained")
        ret = let = None
        success = False
        if learned is not None:
            trace = replay(follower, initiator, cfg, duration=learned)
            ret, let, success = trace.ret, trace.let, trace.success
            if not success:
                flags.append("fails")
        report.rows.append(PairSummary(
            follower, initiator, peer, baseline, learned,
            None if oracle is None else oracle * TICK_MS, ret, let, success, ";".join(flags)))
    return report


def _with_overrides(cfg: ScenarioConfig, episodes=None, seed=None, contending=None) -> ScenarioConfig:
    changes = {}
    if episodes is not None:
        changes["episodes"] = episodes
    if seed is not None:
        changes["seed"] = seed
    if contending:
        changes["contending_followers"] = True
    return cfg.replace(**changes) if changes else cfg


def run_policy(cfg: ScenarioConfig, policy: str = "qnav"):
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}")
    result = run_training(cfg, policy)
    return summarize(policy, cfg, result.tables), result


def cmd_run(config_path, policy: str = "qnav", episodes: int | None = None,
            seed: int | None = None, out_dir=None, contending_followers: bool = False,
            dump_full_qtable: bool = False, echo: bool = True) -> SummaryReport:
    """Run one policy and write rewards.csv, trace.csv, summary.csv and scenario.txt."""
    cfg = config_path if isinstance(config_path, ScenarioConfig) else load_config(config_path)
    cfg = _with_overrides(cfg, episodes, seed, contending_followers)
    report, result = run_policy(cfg, policy)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rewards.csv").write_text(rewards_to_csv(result.tables, full=dump_full_qtable))
        (out / "trace.csv").write_text(traces_to_csv(result.traces))
        (out / "summary.csv").write_text(report.to_csv())
        (out / "scenario.txt").write_text(dump_config(cfg))
    if echo:
        print(report.format_table())
    return report


def read_rewards(path) -> dict[tuple[int, int], dict[int, int]]:
    rows: dict[tuple[int, int], dict[int, int]] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (int(rec["learner"]), int(rec["peer"]))
            rows.setdefault(key, {})[int(rec["nav_index"])] = int(rec["reward"])
    return rows


def cmd_reward_curve(rewards_csv, learner: int, peer: int, out=None) -> list[tuple[int, int]]:
    """Dense ``nav_index,reward`` series for one (learner, peer) row."""
    rows = read_rewards(rewards_csv)
    if (learner, peer) not in rows:
        available = ", ".join(f"{a}/{b}" for a, b in sorted(rows)) or "none"
        raise KeyError(f"no rewards for learner {learner}, peer {peer}; available learner/peer: {available}")
    entries = rows[(learner, peer)]
    depth = max(entries) + 1
    series = [(i, entries.get(i, 0)) for i in range(depth)]
    text = "nav_index,reward\n" + "".join(f"{i},{r}\n" for i, r in series)
    if out is None:
        print(text, end="")
    else:
        Path(out).write_text(text)
    return series


COMPARE_HEADER = ["follower", "initiator", "baseline_nav", "learned_nav", "oracle_nav", "ret",
                  "baseline_let", "let", "saving_fraction", "reported_baseline_nav",
                  "reported_saving_fraction"]


@dataclass
class Comparison:
    cfg: ScenarioConfig
    baseline: SummaryReport
    qnav: SummaryReport

    def rows(self):
        for q in self.qnav.rows:
            b = self.baseline.pair(q.follower, q.initiator)
            yield b, q

    def savings(self) -> list[float]:
        return [q.saving_fraction for _, q in self.rows() if q.saving_fraction is not None]

    def reported_savings(self) -> list[float]:
        return [q.reported_saving_fraction for _, q in self.rows()
                if q.reported_saving_fraction is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COMPARE_HEADER)
        for b, q in self.rows():
            writer.writerow([
                q.follower, q.initiator, _fmt_time(q.baseline_nav), _fmt_time(q.learned_nav),
                _fmt_time(q.oracle_nav), _fmt_time(q.ret), _fmt_time(b.let), _fmt_time(q.let),
                _fmt_ratio(q.saving_fraction), _fmt_time(REPORTED_BASELINE_NAV),
                _fmt_ratio(q.reported_saving_fraction),
            ])
        for label, agg in (("max", max), ("mean", lambda xs: sum(xs) / len(xs))):
            s, r = self.savings(), self.reported_savings()
            writer.writerow(["aggregate", label, "", "", "", "", "", "",
                             _fmt_ratio(agg(s) if s else None), _fmt_time(REPORTED_BASELINE_NAV),
                             _fmt_ratio(agg(r) if r else None)])
        return buf.getvalue()


def compare(cfg: ScenarioConfig) -> Comparison:
    """Baseline and Q-NAV on the same seeded episode stream."""
    baseline, _ = run_policy(cfg, "baseline")
    qnav, _ = run_policy(cfg, "qnav")
    return Comparison(cfg, baseline, qnav)


def cmd_compare(config_path, seed: int | None = None, out_dir=None, episodes: int | None = None,
                echo: bool = True) -> Comparison:
    cfg = config_path if isinstance(config_path, ScenarioConfig) else load_config(config_path)
    cfg = _with_overrides(cfg, episodes, seed)
    result = compare(cfg)
    text = result.to_csv()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_text(text)
    if echo:
        print(text, end="")
    return result


def fairness_gaps(traces: list[ExchangeTrace]) -> dict[tuple[int, int], Time]:
    """Largest let - ret per (follower, peer) over successful traces."""
    gaps: dict[tuple[int, int], Time] = {}
    for t in traces:
        if t.success:
            key = (t.follower, t.peer_row)
            gaps[key] = max(gaps.get(key, t.let - t.ret), t.let - t.ret)
    return gaps


def parse_seed_range(text: str) -> list[int]:
    """``seeds=a..b`` (inclusive) into a list of seeds."""
    body = text.split("=", 1)[1] if "=" in text else text
    if ".." not in body:
        raise ConfigError(f"expected seeds=a..b, got {text!r}", key="sweep")
    lo, hi = body.split("..", 1)
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"expected seeds=a..b, got {text!r}", key="sweep") from None
    if hi < lo:
        raise ConfigError("empty seed range", key="sweep")
    return list(range(lo, hi + 1))

