"""Quantile machinery on toy problems.

1. Project eight equally likely returns onto four quantile supports.
2. Run the distributional update on a single self-looping state and watch
   every support approach r / (1 - gamma).
3. Check the projected Bellman contraction on random small MDPs.

    python3 demos/quantile_learning.py
"""

import numpy as np

from optlab.drl.contraction import iterate_distances, random_mdp, random_table, verify_contraction
from optlab.drl.quantile import qr_loss, quantile_levels, quantile_projection, wasserstein_d1
from optlab.drl.tables import QuantileTable, qrdrl_step

samples = np.arange(1.0, 9.0)
z = quantile_projection(samples, 4)
print(f"levels {quantile_levels(4)} -> supports {z}")
print(f"pinball loss {qr_loss(samples, z):.4f}, shifted by 1.5: {qr_loss(samples, z + 1.5):.4f}")
print(f"W1(samples, supports) = {wasserstein_d1(np.repeat(z, 2), samples):.3f}")

table = QuantileTable(1, [1], 8)
gamma, r = 0.9, 2.0
for step in range(1, 201):
    qrdrl_step(table, 0, 0, r, 0, gamma)
    if step in (1, 10, 50, 200):
        print(f"step {step:>3}: supports {np.round(table.z[0, 0, [0, -1]], 4)}")
print(f"fixed point r/(1-gamma) = {r / (1 - gamma)}")

rng = np.random.default_rng(0)
rep = verify_contraction(200, gamma, 10, rng)
print(f"contraction check: {rep.violations} violations in {rep.trials} trials, "
      f"worst margin {rep.worst_margin:.3e}")
mdp = random_mdp(rng)
d = iterate_distances(random_table(rng, mdp, gamma, 10), mdp, gamma, 80)
print(f"iterate distance: {d[0]:.3f} -> {d[-1]:.2e} after {d.size} applications")
