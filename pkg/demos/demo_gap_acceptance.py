"""
Gap acceptance and the abort guard
==================================

Before a lane change starts, the target-lane gap has to absorb any speed
difference at a bounded deceleration. During the maneuver the same test
runs every step; a failure before the halfway line sends the vehicle back.
"""

from lanechange.gap import assess_gap, lateral_progress, safety_guard

# A lag vehicle 6 m/s faster needs 48 m: 40 m is not enough.
for lag_gap in (40.0, 48.0, 60.0):
    g = assess_gap(20.0, lead=(30.0, 22.0), lag=(lag_gap, 26.0))
    print(f"lag gap {lag_gap:4.0f} m: lead needs {g.lead_required:.1f} m, lag needs "
          f"{g.lag_required:.1f} m -> {'accept' if g.accepted else 'reject'}")

# %%
# The halfway rule
# ----------------
# Progress is the fraction of the way from the origin lane center to the
# target lane center.
bad = assess_gap(20.0, lag=(40.0, 26.0))
for y in (2.2, 3.5, 4.5):
    p = lateral_progress(y, 1.875, 5.625)
    print(f"y={y:.2f} m progress {p:4.0%}: {safety_guard(bad, p).value}")
