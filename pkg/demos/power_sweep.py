"""Small transmit-power sweep written to CSV, then aggregated.

    python3 demos/power_sweep.py [drops] [outdir]
"""

import sys
from pathlib import Path

from optlab import harness
from optlab.scenario import NetworkConfig

drops = int(sys.argv[1]) if len(sys.argv) > 1 else 5
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo-out")

cfg = NetworkConfig()
records = harness.sweep(cfg, ["proposed_fp", "fixed_ir", "direct"], "P_max", [20, 30, 40],
                        drops=drops)
harness.emit_csv(records, out / "sweep_P_max.csv")
harness.emit_plot_data(records, out / "plot_P_max.csv")

print(f"{'scheme':<12} {'P_max':>6} {'mean':>9} {'stderr':>8}  (Mbit/s)")
for row in harness.aggregate(records):
    print(f"{row['scheme']:<12} {row['value']:>6g} {row['mean'] / 1e6:>9.2f} "
          f"{row['stderr'] / 1e6:>8.2f}")
print(f"records in {out / 'sweep_P_max.csv'}")
