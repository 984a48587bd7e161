"""Walk through a single random drop.

Places the UEs, builds the cascaded channels, runs the ON/OFF pilot phase
and then compares the three perfect-CSI schemes on the same channels.

    python3 demos/one_drop.py [seed]
"""

import sys

import numpy as np

from optlab import harness
from optlab import rng as rngs
from optlab.drop import drop_channels
from optlab.estimation import run_pilot_phase, timing_budget
from optlab.fp import joint_optimize
from optlab.scenario import NetworkConfig

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = NetworkConfig()

geometry, channels = drop_channels(cfg, seed)
print(f"UE positions (m):\n{np.round(geometry.ue_positions, 2)}")
print(f"cascaded path loss (dB): {np.round(10 * np.log10(channels.path_loss), 1)}")

# the BS-IR link is a single path, so every G_k is rank one
s = np.linalg.svd(channels.true_G[0], compute_uv=False)
print(f"singular values of G_0: {s[0]:.3e}, next {s[1]:.1e}")

est = run_pilot_phase(channels, cfg.p_pilot, cfg.sigma_bs2, rngs.stream(seed, "pilot_noise"))
print(f"estimation error per UE: {est.squared_error}  (theory {est.theoretical_mse:.3e})")

t = timing_budget(cfg)
print(f"first-slot data time {t.transmit_first_slot * 1e3:.0f} ms, "
      f"effective fraction {t.effective / t.interval:.3f}")

sol = joint_optimize(channels, cfg.p_max, cfg.sigma2, cfg.bandwidth)
print(f"joint optimiser: {sol.iterations} outer iterations, converged={sol.converged}, "
      f"instantaneous rate {sol.rate / 1e6:.2f} Mbit/s")
print(f"reflection amplitudes: {np.round(np.abs(sol.phi), 3)}")

for scheme in ("proposed_fp", "fixed_ir", "direct"):
    rec = harness.run_drop(cfg, scheme, seed)
    print(f"{scheme:<12} time-averaged {rec.metric / 1e6:7.2f} Mbit/s")
