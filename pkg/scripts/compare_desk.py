"""End-to-end desk comparison: exact vs. WL vs. Metropolis at N=4.

Usage: python scripts/compare_desk.py [config] [out_dir]
"""

import sys
from pathlib import Path

from qwl.experiment import load_config, run_compare
from qwl.thermo import QUANTITIES

root = Path(__file__).resolve().parent.parent
cfg = load_config(sys.argv[1] if len(sys.argv) > 1 else root / "configs" / "paper_desk.cfg")
out = sys.argv[2] if len(sys.argv) > 2 else cfg.output_dir
res = run_compare(cfg, out)
print(f"WL steps {res.wl.total_steps}, Metropolis post-burn-in steps {res.metropolis.post_burn_in_steps}")
print(f"{'quantity':<10}{'WL RMSE':>12}{'Metropolis RMSE':>18}")
for q in QUANTITIES:
    print(f"{q:<10}{res.rmse['wl'][q]:>12.4g}{res.rmse['metropolis'][q]:>18.4g}")
print(f"artifacts in {out}")
