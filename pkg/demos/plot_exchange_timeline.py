"""
One primary exchange, frame by frame
====================================

Node 1 sends RTS to the sink, the sink answers CTS, then DATA and ACK.
Every listener in range gets each frame one propagation delay later.
"""

from qnav_sim import SINK, build_exchange, four_node_scenario
from qnav_sim.core import format_seconds
from qnav_sim.frames import FrameKind

cfg = four_node_scenario()
schedule = build_exchange(1, SINK, 0, cfg)

# transmissions as seen by their senders
for f in schedule.frames:
    print(f"{f.kind.value:4s} {f.src}->{f.dst}  "
          f"{format_seconds(f.tx_start)} .. {format_seconds(f.tx_end)} s")

###############################################################################
# What the bystanders hear
# ------------------------
# Node 2 (500 m from node 1) catches the RTS almost at once, node 3 a full
# second later. Both decide their NAV from that first control frame.

for node in (2, 3):
    rts = schedule.arrival(FrameKind.RTS, node)
    ack = schedule.arrival(FrameKind.ACK, node)
    print(f"node {node}: RTS heard {format_seconds(rts.start)}-{format_seconds(rts.end)} s, "
          f"last ACK bit {format_seconds(ack.end)} s")

print("sink channel free at", format_seconds(schedule.channel_busy_end_at_sink), "s")

###############################################################################
# Full event log, as the ``timeline`` CLI command writes it

print(schedule.to_csv())
