"""
Traffic on a three-lane segment
===============================

Vehicles enter each lane every 5-10 s with a speed limit between 80 and
120 km/h and follow the gated IDM. A scripted lane change driven by a
full-state feedback controller shows the episode machinery.
"""

import numpy as np

from lanechange import ScenarioConfig, World
from lanechange.verification import reference_controller

world = World(config=ScenarioConfig(seed=3))
for k in range(6000):
    world.step()
    if k % 1500 == 0:
        per_lane = [len(lane) for lane in world.lane_members()]
        print(f"t={world.time:6.1f} s  vehicles per lane {per_lane}  spawned {world.spawned}")

speeds = [v.v * 3.6 for v in world.vehicles.values()]
print(f"mean speed {np.mean(speeds):.1f} km/h over {len(speeds)} vehicles")

# %%
# One lane change
# ---------------
# The reference controller reads the yaw rate directly, which the learned
# policy never sees.
world = World(config=ScenarioConfig(departure_interval=(1e4, 1e4)), lane_changes=True)
ego = world.add_vehicle(0, 200.0, 25.0)
ep = world.command_lane_change(ego.vid, 1)
policy = reference_controller(world)
while not ep.finished:
    world.step(policy)
    if ep.step_count % 10 == 0 and ep.transitions:
        tr = ep.transitions[-1]
        print(f"step {ep.step_count:3d}  y={tr.s_next.y:.3f}  theta={tr.s_next.theta:+.4f}  r={tr.r:+.4f}")
print(f"outcome {ep.outcome} after {ep.step_count * 0.1:.1f} s, return {ep.total_return:.3f}")
