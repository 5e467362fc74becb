"""Quantum WL density of states against the brute-force bin counts.

Prints the mean normalised ln g per bin next to ln(count), and how much
weight WL assigns to bins that hold no eigenvalue (QPE leakage).
Usage: python scripts/wl_dos_oracle.py [N] [k] [seeds]
"""

import sys
import time

import numpy as np

from qwl.hamiltonian import HamiltonianSpec, brute_force_dos, energy_window, solve
from qwl.qpe import QpeConfig, QpeSampler
from qwl.wanglandau import WlConfig, default_bins, run_quantum_wl

n = int(sys.argv[1]) if len(sys.argv) > 1 else 4
k = int(sys.argv[2]) if len(sys.argv) > 2 else 10
seeds = int(sys.argv[3]) if len(sys.argv) > 3 else 20

spec = HamiltonianSpec(n, 2.0, 1.0)
spectrum = solve(spec, vectors=False)
qpe = QpeConfig(k, energy_window(spec))
bins = default_bins(qpe.window, k)
sampler = QpeSampler(spectrum, qpe)
counts = brute_force_dos(spectrum, bins)

t0 = time.perf_counter()
runs = [run_quantum_wl(spectrum, qpe, WlConfig(bins), np.random.default_rng(s), sampler=sampler)
        for s in range(seeds)]
print(f"{seeds} runs in {time.perf_counter() - t0:.1f} s, "
      f"mean steps {np.mean([t.total_steps for _, t in runs]):.3g}")

ln_g = np.array([d.ln_g for d, _ in runs])
visited = np.all([d.visited for d, _ in runs], axis=0)
mean = np.where(visited, ln_g.mean(0, where=np.isfinite(ln_g)), -np.inf)
print(f"{'bin':>4}{'E':>10}{'count':>7}{'ln count':>10}{'WL ln g':>10}{'diff':>8}")
for b in range(bins.ell):
    if counts[b] or visited[b]:
        ref = np.log(counts[b]) if counts[b] else -np.inf
        diff = mean[b] - ref if counts[b] else float("nan")
        print(f"{b:>4}{bins.centers[b]:>10.3f}{counts[b]:>7}{ref:>10.3f}{mean[b]:>10.3f}{diff:>8.3f}")
leak = np.exp(mean[(counts == 0) & visited]).sum()
print(f"states assigned to empty bins: {leak:.3f} of {spectrum.dim}")
