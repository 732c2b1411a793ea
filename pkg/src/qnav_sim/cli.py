"""Command-line entry point: ``qnav-sim {run,compare,reward-curve,timeline}``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .core import SINK, ConfigError, load_config
from .experiments import POLICIES, cmd_compare, cmd_reward_curve, cmd_run, parse_seed_range
from .frames import build_exchange


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnav-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train/evaluate one NAV policy and write CSV artifacts")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--policy", choices=POLICIES, default="qnav")
    run.add_argument("--episodes", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path)
    run.add_argument("--contending-followers", action="store_true")
    run.add_argument("--dump-full-qtable", action="store_true")
    run.add_argument("--sweep", metavar="seeds=A..B",
                     help="run every seed in A..B into OUT/seed_<n>")

    cmp_ = sub.add_parser("compare", help="baseline vs Q-NAV on the same episode stream")
    cmp_.add_argument("--config", required=True, type=Path)
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--episodes", type=int)
    cmp_.add_argument("--out", type=Path)

    curve = sub.add_parser("reward-curve", help="dense nav_index,reward series for one row")
    curve.add_argument("rewards_csv", type=Path)
    curve.add_argument("--learner", type=int, required=True)
    curve.add_argument("--peer", type=int, required=True)
    curve.add_argument("--out", type=Path)

    tl = sub.add_parser("timeline", help="event timeline CSV of one primary exchange")
    tl.add_argument("--config", required=True, type=Path)
    tl.add_argument("--initiator", type=int, required=True)
    tl.add_argument("--out", type=Path)
    return parser


def _sweep_one(args):
    config, policy, episodes, seed, out, contending, full = args
    cmd_run(config, policy, episodes, seed, out, contending, full, echo=False)
    return seed


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if args.sweep:
                seeds = parse_seed_range(args.sweep)
                if args.out is None:
                    raise ConfigError("--sweep needs --out", key="out")
                jobs = [(args.config, args.policy, args.episodes, s, args.out / f"seed_{s}",
                         args.contending_followers, args.dump_full_qtable) for s in seeds]
                with ProcessPoolExecutor() as pool:
                    for seed in pool.map(_sweep_one, jobs):
                        print(f"seed {seed}: done -> {args.out / f'seed_{seed}'}")
            else:
                cmd_run(args.config, args.policy, args.episodes, args.seed, args.out,
                        args.contending_followers, args.dump_full_qtable)
        elif args.command == "compare":
            cmd_compare(args.config, args.seed, args.out, args.episodes)
        elif args.command == "reward-curve":
            cmd_reward_curve(args.rewards_csv, args.learner, args.peer, args.out)
        elif args.command == "timeline":
            cfg = load_config(args.config)
            text = build_exchange(args.initiator, SINK, 0, cfg).to_csv()
            if args.out is None:
                print(text, end="")
            else:
                args.out.write_text(text)
    except ConfigError as exc:
        print(f"qnav-sim: config error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"qnav-sim: {exc.args[0]}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qnav-sim: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
