"""
Transport plans on a toy cost matrix
====================================

A frame-to-prototype plan spreads each frame's mass (1/T) over the K
prototypes. This script shows how the entropy weight, the column penalty and
the transition penalty change the plan on a small, hand-made cost.
"""

# %%
# A 12-frame, 3-prototype cost whose cheapest prototype changes twice,
# with two noisy frames in the middle of the first block.
import numpy as np

from otseg.transport import TransportProblem, decode_labels, solve, transition_mass

cost = np.array([[0.1, 0.8, 0.9]] * 4 + [[0.1, 0.8, 0.9]] * 4 + [[0.8, 0.9, 0.1]] * 4)
cost[1] = cost[6] = [0.55, 0.5, 0.9]
cost[4:8] = [0.8, 0.1, 0.9]
print("cheapest prototype per frame:", cost.argmin(axis=1))

# %%
# Sharper plans with smaller eps. Rows always hold exactly 1/T.
for eps in (0.5, 0.07, 0.01):
    r = solve(TransportProblem(cost, alpha=0.0, eps=eps, lambda_ub=0.05))
    print(f"eps={eps:<5} max cell {r.plan.max():.4f}  row sums ok: "
          f"{np.allclose(r.plan.sum(axis=1), 1 / 12)}  labels {decode_labels(r)}")

# %%
# The column penalty pulls prototype usage toward 1/K. With lambda_ub = 0
# the columns are pinned exactly.
for lam in (0.0, 0.05, 5.0):
    r = solve(TransportProblem(cost, alpha=0.0, eps=0.07, lambda_ub=lam))
    print(f"lambda_ub={lam:<4} column mass {np.round(r.plan.sum(axis=0), 3)}")

# %%
# The transition term charges mass that switches prototype between
# consecutive frames. Raising alpha removes the two isolated flips.
for alpha in (0.0, 2.0, 20.0):
    r = solve(TransportProblem(cost, alpha=alpha, eps=0.02, lambda_ub=0.05))
    print(f"alpha={alpha:<5} transitions {transition_mass(r.plan):.4f}  labels {decode_labels(r)}  "
          f"outer steps {r.outer_iters}")

# %%
# The objective never goes up between outer steps.
r = solve(TransportProblem(cost, alpha=20.0, eps=0.02))
print("objective history:", np.round(r.history, 5))
