"""
Training and evaluating a lane-change policy
============================================

A short run (3,000 gradient steps instead of 40,000) to show the loop,
the metrics rows and the evaluation report. Use ``lanechange train`` for
the full schedule.
"""

import numpy as np

from lanechange import Environment, TrainConfig, evaluate, run_training

cfg = TrainConfig(total_gradient_steps=3000, sigma_anneal_steps=2500, seed=0)
result = run_training(Environment(), cfg)

losses = np.array([m.loss for m in result.metrics])
print(f"{result.env_steps} simulation steps, {len(result.episodes)} episodes, {result.syncs} target syncs")
print(f"mean loss first 500 steps {losses[:500].mean():.4f}, last 500 {losses[-500:].mean():.4f}")

outcomes = {}
for e in result.episodes:
    outcomes[e.outcome] = outcomes.get(e.outcome, 0) + 1
print("training outcomes:", outcomes)

# %%
# Greedy evaluation on fresh traffic
# ----------------------------------
report = evaluate(result.q, Environment(), episodes=30, seed=1)
for key, value in report.summary().items():
    print(f"{key:16s} {value}")
