"""
Fixed NAV versus learned NAV
============================

Every node sets the same fixed NAV, sized for the worst-case propagation
delay. Near nodes then sit idle long after the channel is free, and the
idle time differs from node to node. A learned NAV closes that gap.
"""

from qnav_sim import four_node_scenario
from qnav_sim.core import format_seconds
from qnav_sim.experiments import compare

cfg = four_node_scenario(seed=42)
result = compare(cfg)

print("follower <- initiator   RET      fixed LET  learned LET  saving")
for b, q in result.rows():
    print(f"    {q.follower}    <-    {q.initiator}       {format_seconds(q.ret):>7s}  "
          f"{format_seconds(b.let):>9s}  {format_seconds(q.let):>11s}  {q.saving_fraction:6.1%}")

###############################################################################
# Idle time after the channel clears
# ----------------------------------
# With the fixed NAV, late arrival at the sink (LET - RET) spreads over
# seconds. With the learned one it stays under one 0.1 s tick.

for label, report in (("fixed", result.baseline), ("learned", result.qnav)):
    gaps = [r.let - r.ret for r in report.rows]
    print(f"{label:8s} idle ms: min {min(gaps)}, max {max(gaps)}")
