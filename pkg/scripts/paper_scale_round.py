"""Time one 10,000-step WL block at N=9, k=11 with the eigenbasis statevector tier.

Pass a smaller step count as the first argument for a quick estimate.
"""

import sys
import time

import numpy as np

from qwl.hamiltonian import HamiltonianSpec, energy_window, solve
from qwl.qpe import QpeConfig, QpeSampler
from qwl.wanglandau import WlConfig, default_bins, run_quantum_wl

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
spec = HamiltonianSpec(9, 2.0, 1.0)
spectrum = solve(spec)
qpe = QpeConfig(11, energy_window(spec), "eigen_statevector")
wl = WlConfig(default_bins(qpe.window, qpe.k), steps_per_check=steps, max_rounds=1, max_steps=steps)
sampler = QpeSampler(spectrum, qpe)
t0 = time.perf_counter()
dos, trace = run_quantum_wl(spectrum, qpe, wl, np.random.default_rng(0), sampler=sampler)
dt = time.perf_counter() - t0
print(f"{trace.total_steps} steps in {dt:.1f} s ({1e3 * dt / trace.total_steps:.1f} ms/step), "
      f"{int(dos.visited.sum())} bins visited")
