"""
Car following with the Intelligent Driver Model
===============================================

A single follower approaches a slower leader on an empty lane. We watch
the gap settle toward the IDM equilibrium and compare the plain model with
the gated variant used by the simulator.
"""

import numpy as np

from lanechange.idm import desired_gap, equilibrium_gap, idm_accel, modified_idm_accel

v_limit = 120 / 3.6
dt = 0.1

# Leader cruises at 20 m/s; the follower starts faster, 120 m behind.
x_lead, v_lead = 120.0, 20.0
x, v = 0.0, 30.0
length = 5.0

for k in range(1201):
    gap = x_lead - length - x
    if k % 200 == 0:
        print(f"t={k * dt:5.1f} s  gap={gap:6.2f} m  v={v:5.2f} m/s  s*={desired_gap(v, v_lead):6.2f} m")
    a = max(-8.0, modified_idm_accel(v, 20.0 / 0.9, gap, v_lead))
    v = max(0.0, v + a * dt)
    x += v * dt
    x_lead += v_lead * dt

# The follower's own speed limit is 20/0.9 m/s, so it settles at v/v0 = 0.9.
print(f"equilibrium gap at v/v0=0.9: {equilibrium_gap(20.0, 20.0 / 0.9):.2f} m")

# %%
# The free-gap gate
# -----------------
# Far behind a leader the plain IDM still holds back a little; the gate drops
# the interaction term once the gap exceeds five desired gaps.
for gap in (40.0, 150.0, 400.0):
    print(f"gap {gap:5.0f} m  plain {idm_accel(25.0, v_limit, gap, 25.0):+.4f}"
          f"  gated {modified_idm_accel(25.0, v_limit, gap, 25.0):+.4f} m/s^2")

# Free-road acceleration curve.
speeds = np.linspace(0, v_limit, 6)
print("free road:", ", ".join(f"{s:.1f}->{idm_accel(s, v_limit):.3f}" for s in speeds))
