"""Mean absolute QPE energy error over all eigenstates as the phase register grows."""

import sys

from qwl.hamiltonian import HamiltonianSpec, energy_window, solve
from qwl.qpe import QpeConfig, mean_abs_error

n = int(sys.argv[1]) if len(sys.argv) > 1 else 4
spec = HamiltonianSpec(n, 2.0, 1.0)
spectrum = solve(spec, vectors=False)
print(f"N={n}: window {energy_window(spec)}")
print(f"{'k':>3}{'spacing':>12}{'mean |dE|':>14}")
for k in range(2, 15):
    cfg = QpeConfig(k, energy_window(spec))
    print(f"{k:>3}{cfg.spacing:>12.5f}{mean_abs_error(spectrum, cfg):>14.6f}")
