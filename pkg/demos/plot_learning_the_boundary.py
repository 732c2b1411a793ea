"""
Learning where the NAV boundary sits
====================================

A follower that waits too little collides with the tail of the primary
exchange (reward -1); waiting long enough succeeds (+1). After training
the lowest positive index marks the shortest safe NAV.
"""

import numpy as np

from qnav_sim import four_node_scenario, oracle_min_nav, run_training

cfg = four_node_scenario(seed=42)
result = run_training(cfg)
row = result.tables[2].row(1)  # node 2 reacting to node 1's RTS

boundary = oracle_min_nav(2, 1, cfg)
print("brute-force boundary:", boundary, "ticks =", boundary / 10, "s")
print("greedy after training:", result.tables[2].greedy_index(1))

###############################################################################
# Reward around the boundary
# --------------------------
# Below it everything is non-positive. Above it, entries only collect the
# occasional exploratory success; the boundary itself is hit every time the
# follower exploits.

for i in range(boundary - 5, boundary + 6):
    bar = "#" * min(60, abs(int(row[i])) // 20)
    print(f"{i:4d} {int(row[i]):6d} {'+' if row[i] > 0 else '-'}{bar}")

positive = np.flatnonzero(row > 0)
print("positive entries:", len(positive), "from", positive.min(), "to", positive.max())

###############################################################################
# Exploration fades once a node has heard enough control frames

t = result.tables[2]
print("frames heard by node 2:", t.receive_count, "final epsilon:",
      round(result.policy.epsilon[2].e, 4))
