"""Quick oracle-equivalence battery behind ``qwl validate``.

Each check compares an implementation path against an independent oracle at
a scale that runs in well under a minute in total.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .hamiltonian import HamiltonianSpec, brute_force_dos, energy_window, exact_thermo, solve
from .metropolis import MetropolisConfig, level_occupation, run_quantum_metropolis
from .qpe import QpeConfig, QpeSampler
from .thermo import canonical_curves
from .wanglandau import IsingChain, WlConfig, default_bins, run_classical_wl, run_quantum_wl

_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def kron_tfim(n: int, coupling: float, field: float) -> np.ndarray:
    """Dense TFIM from Kronecker products; qubit 0 is the rightmost factor."""

    def site(op, i):
        return reduce(np.kron, [op if j == i else np.eye(2) for j in reversed(range(n))])

    H = np.zeros((1 << n, 1 << n))
    for i in range(n):
        H += coupling * site(_Z, i) @ site(_Z, (i + 1) % n) + field * site(_X, i)
    return H


def _hamiltonian() -> Check:
    worst = 0.0
    for n in (1, 2, 3, 4):
        ours = solve(HamiltonianSpec(n, 2.0, 1.0), vectors=False).eigenvalues
        ref = np.linalg.eigvalsh(kron_tfim(n, 2.0, 1.0))
        worst = max(worst, float(np.max(np.abs(ours - ref))))
    return Check("hamiltonian vs Kronecker oracle", worst < 1e-10, f"max |dE| = {worst:.2e}")


def _tiers() -> Check:
    spec = HamiltonianSpec(2, 2.0, 1.0)
    cfg = QpeConfig(5, energy_window(spec), "eigen_statevector")
    s = QpeSampler(solve(spec), cfg)
    worst = 0.0
    for i in range(s.n_states):
        ref = s.outcome_distribution(i)
        for frame in ("eigen", "computational"):
            worst = max(worst, float(np.max(np.abs(s.eigen_circuit_probabilities(i, frame) - ref))))
    return Check("QPE circuit vs closed form", worst < 1e-10, f"max |dp| = {worst:.2e}")


def _pair_tier() -> Check:
    spec = HamiltonianSpec(2, 2.0, 1.0)
    spectrum = solve(spec)
    cfg = QpeConfig(4, energy_window(spec), "pair_statevector")
    s = QpeSampler(spectrum, cfg)
    n = 20_000
    idx, m = s.sample_batch(np.random.default_rng(7), n)
    emp = np.bincount(idx * 16 + m, minlength=4 * 16) / n
    ref = np.concatenate([s.outcome_distribution(i) for i in range(4)]) / 4
    tv = 0.5 * float(np.abs(emp - ref).sum())
    return Check("pair-register tier vs closed form", tv < 0.03, f"TV = {tv:.4f} at {n} samples")


def _uniform() -> Check:
    from scipy.stats import chisquare

    spec = HamiltonianSpec(3, 2.0, 1.0)
    s = QpeSampler(solve(spec, vectors=False), QpeConfig(6, energy_window(spec)))
    idx, _ = s.sample_batch(np.random.default_rng(11), 100_000)
    p = chisquare(np.bincount(idx, minlength=8)).pvalue
    return Check("uniform eigenstate proposal", bool(p > 1e-3), f"chi-square p = {p:.3f}")


def _classical_wl() -> Check:
    model = IsingChain(6, 2.0, 0.0)
    bins = model.level_bins()
    counts = np.bincount(
        np.floor((model.all_energies() - bins.window.e_lo) / bins.width).astype(int),
        minlength=bins.ell,
    )
    occ = counts > 0
    est = np.mean([run_classical_wl(model, WlConfig(bins), np.random.default_rng(s))[0].ln_g
                   for s in range(5)], axis=0)
    dev = float(np.max(np.abs(est[occ] - np.log(counts[occ]))))
    return Check("classical WL vs enumeration", dev < 0.2, f"max |d ln g| = {dev:.3f}")


def _quantum_wl() -> Check:
    spec = HamiltonianSpec(2, 2.0, 1.0)
    spectrum = solve(spec, vectors=False)
    qpe = QpeConfig(10, energy_window(spec))
    bins = default_bins(qpe.window, qpe.k)
    counts = brute_force_dos(spectrum, bins)
    occ = counts > 0
    runs = [run_quantum_wl(spectrum, qpe, WlConfig(bins), np.random.default_rng(s))[0]
            for s in range(5)]
    if not all(r.visited[occ].all() for r in runs):
        return Check("quantum WL vs brute-force DOS", False, "an occupied bin was never visited")
    est = np.mean([r.ln_g for r in runs], axis=0)
    dev = float(np.max(np.abs(est[occ] - np.log(counts[occ]))))
    return Check("quantum WL vs brute-force DOS", dev < 0.25, f"max |d ln g| = {dev:.3f}")


def _metropolis() -> Check:
    spec = HamiltonianSpec(2, 2.0, 1.0)
    spectrum = solve(spec, vectors=False)
    qpe = QpeConfig(10, energy_window(spec))
    beta = 1.0
    trace = run_quantum_metropolis(spectrum, qpe, MetropolisConfig(beta, 500_000),
                                   np.random.default_rng(3))
    levels, occ = level_occupation(trace, spectrum)
    deg = np.array([np.sum(np.isclose(spectrum.eigenvalues, e, atol=1e-8)) for e in levels])
    w = deg * np.exp(-beta * (levels - levels.min()))
    tv = 0.5 * float(np.abs(occ - w / w.sum()).sum())
    return Check("Metropolis vs Boltzmann occupation", tv < 0.02, f"TV = {tv:.4f}")


def _thermo() -> Check:
    spectrum = solve(HamiltonianSpec(3, 2.0, 1.0), vectors=False)
    beta = np.array([0.0, 0.5, 1.0, 2.0])
    c = exact_thermo(spectrum, beta)
    e = spectrum.eigenvalues
    w = np.exp(-np.outer(beta, e))
    Z = w.sum(1)
    U = (w @ e) / Z
    Cv = beta**2 * ((w @ e**2) / Z - U**2)
    S = np.log(Z) + beta * U
    # the same levels given as a pooled DOS must not change anything
    lv, cnt = np.unique(np.round(e, 10), return_counts=True)
    pooled = canonical_curves(lv, np.log(cnt), beta)
    dev = max(float(np.max(np.abs(c.U - U))), float(np.max(np.abs(c.Cv - Cv))),
              float(np.max(np.abs(c.S - S))), float(np.max(np.abs(pooled.U - U))))
    return Check("canonical sums vs direct Boltzmann sums", dev < 1e-9, f"max dev = {dev:.2e}")


CHECKS = (_hamiltonian, _tiers, _pair_tier, _uniform, _classical_wl, _quantum_wl,
          _metropolis, _thermo)


def run_battery() -> list[Check]:
    out = []
    for check in CHECKS:
        try:
            out.append(check())
        except Exception as exc:  # report, keep going
            out.append(Check(check.__name__.lstrip("_"), False, f"error: {exc!r}"))
    return out
