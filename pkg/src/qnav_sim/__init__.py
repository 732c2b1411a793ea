"""Discrete-event simulator for learned NAV timers in underwater acoustic star networks."""

from .core import (
    SINK,
    TICK_MS,
    ConfigError,
    ScenarioConfig,
    four_node_scenario,
    load_config,
    pair_distance,
    parse_config,
    propagation_delay,
)
from .engine import (
    Episode,
    ExchangeTrace,
    failure_rule,
    oracle_min_nav,
    row_oracle,
    run_episode,
    run_training,
)
from .frames import Frame, FrameKind, baseline_nav_cts, baseline_nav_rts, build_exchange
from .policy import QNavPolicy, QTable, epsilon_update, reward_update, select_nav

__version__ = "0.1.0"
