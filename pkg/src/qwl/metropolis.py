"""Quantum Metropolis baseline with the same uniform-eigenstate proposal.

The walker's state is the last accepted measured energy. A rejected move
needs no quantum clean-up: the proposal never depended on the current
eigenstate, so the next step simply prepares a fresh pair state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .hamiltonian import Spectrum
from .qpe import QpeConfig, QpeSampler

BLOCK = 1 << 16


@dataclass(frozen=True)
class MetropolisConfig:
    beta: float
    total_steps: int
    burn_in: int = 5000

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError("beta must be finite and >= 0")
        if int(self.total_steps) != self.total_steps or self.total_steps < 1:
            raise ValueError("total_steps must be a positive integer")
        if int(self.burn_in) != self.burn_in or not 0 <= self.burn_in < self.total_steps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < total_steps")


@dataclass
class EnergyTrace:
    """Post-burn-in energies, one per step, with the matching eigen indices."""

    energies: np.ndarray
    eigen_index: np.ndarray
    beta: float
    accepted: int = 0


def metro_accept(e_i: float, e_j: float, beta: float, u: float) -> bool:
    """``u < min(1, exp(-beta (e_j - e_i)))``."""
    return u < math.exp(min(-beta * (e_j - e_i), 0.0))


def run_quantum_metropolis(spectrum: Spectrum, qpe_cfg: QpeConfig, m_cfg: MetropolisConfig,
                           rng, sampler=None) -> EnergyTrace:
    if sampler is None:
        sampler = QpeSampler(spectrum, qpe_cfg)
    energies = np.asarray(sampler.outcome_energies, dtype=float)

    i0, m0 = sampler.sample_batch(rng, 1)
    cur_e, cur_i = float(energies[m0[0]]), int(i0[0])
    n_keep = m_cfg.total_steps - m_cfg.burn_in
    out_e = np.empty(m_cfg.total_steps)
    out_i = np.empty(m_cfg.total_steps, dtype=np.int64)
    n_acc = 0
    for start in range(0, m_cfg.total_steps, BLOCK):
        n = min(BLOCK, m_cfg.total_steps - start)
        idx, m = sampler.sample_batch(rng, n)
        u = rng.random(n)
        cur_e, cur_i, a = _kernels.metropolis_block(
            energies[m], idx, u, float(m_cfg.beta), cur_e, cur_i,
            out_e[start:start + n], out_i[start:start + n],
        )
        n_acc += a
    return EnergyTrace(out_e[-n_keep:].copy(), out_i[-n_keep:].copy(), m_cfg.beta, n_acc)


def moments(trace: EnergyTrace | np.ndarray, beta: float | None = None) -> tuple[float, float]:
    """Mean energy and ``beta^2 Var(E)`` from a trace."""
    if isinstance(trace, EnergyTrace):
        e = trace.energies
        beta = trace.beta if beta is None else beta
    else:
        e = np.asarray(trace, dtype=float)
    if beta is None:
        raise ValueError("beta is required for a bare energy array")
    if e.size == 0:
        raise ValueError("empty trace")
    U = float(e.mean())
    var = float(np.mean((e - U) ** 2))
    return U, beta**2 * var


def level_occupation(trace: EnergyTrace, spectrum: Spectrum, decimals: int = 8
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of steps spent in each distinct eigenvalue level.

    Returns ``(levels, occupation)``; degenerate eigenvectors are pooled.
    """
    levels, level_of = np.unique(np.round(spectrum.eigenvalues, decimals), return_inverse=True)
    occ = np.bincount(level_of[trace.eigen_index], minlength=levels.size)
    return levels, occ / occ.sum()


def write_trace(trace: EnergyTrace, seed: int, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# {trace.beta!r} {seed}\n")
        for e in trace.energies:
            fh.write(f"{float(e)!r}\n")
    return path
