"""
A Q-function that is quadratic in the action
============================================

With Q(s, a) = A(s) (B(s) - a)^2 + C(s) and A < 0 the greedy action is
B(s), so acting greedily costs one forward pass and no search. Here we
check that against a brute-force grid and look at the pieces of B.
"""

import numpy as np

from lanechange.qlearning import QuadraticQ, compose_B, greedy_action, q_value
from lanechange.verification import grid_argmax, loss_gradient_check

rng = np.random.default_rng(0)
q = QuadraticQ.initialize(rng)
states = rng.uniform(-1, 1, (5, 8))

b, pre, sen, bound = compose_B(q, states)
for row in zip(pre, sen, bound, b):
    print("pre {:+.4f}  sen {:.4f}  bound {:.4f}  B {:+.4f}".format(*row))

# Grid search agrees with the closed form.
print("max |grid - greedy|:", np.max(np.abs(grid_argmax(q, states) - greedy_action(q, states))))

# Q is a downward parabola in a around B.
s = states[:1]
for a in (-0.2, 0.0, float(b[0]), 0.2):
    print(f"Q(s, {a:+.3f}) = {q_value(q, s, a)[0]:+.6f}")

# %%
# Backpropagation through the whole TD loss
# -----------------------------------------
# Finite differences in extended precision over all five networks.
print("TD-loss gradient relative error:", loss_gradient_check(q, trials=1, rng=rng))
