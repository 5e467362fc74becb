"""Periodic transverse-field Ising chain and its exact eigensystem.

    H = J * sum_i Z_i Z_{i+1} + h * sum_i X_i,   Z_{N+1} = Z_1

Conventions: Z|0> = +|0>, and spin ``i`` is bit ``i`` of the basis index
(bit 0 least significant). The periodic sum is taken literally, so an
N=2 chain carries its single bond twice and N=1 gives ``J * I``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .binning import BinSpec, EnergyWindow, bin_indices
from .thermo import ThermoCurves, canonical_curves

MAX_SPINS = 13


@dataclass(frozen=True)
class HamiltonianSpec:
    n_spins: int
    coupling: float = 2.0
    field: float = 1.0

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins}")
        if not (np.isfinite(self.coupling) and np.isfinite(self.field)):
            raise ValueError("coupling and field must be finite")

    @property
    def dim(self) -> int:
        return 1 << self.n_spins


@dataclass
class Spectrum:
    """Ascending eigenvalues with eigenvectors as columns (optional)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")
        if self.eigenvectors is not None:
            d = self.eigenvalues.size
            if self.eigenvectors.shape != (d, d):
                raise ValueError("eigenvector matrix does not match eigenvalue count")

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def n_spins(self) -> int:
        n = self.dim.bit_length() - 1
        if 1 << n != self.dim:
            raise ValueError(f"spectrum of size {self.dim} is not a qubit register")
        return n


def build_tfim(spec: HamiltonianSpec) -> np.ndarray:
    n = spec.n_spins
    if n > MAX_SPINS:
        raise ValueError(f"n_spins={n} exceeds the dense guard of {MAX_SPINS}")
    dim = spec.dim
    states = np.arange(dim)
    # z[i, s] = +1 if bit i of s is 0
    z = 1 - 2 * ((states[None, :] >> np.arange(n)[:, None]) & 1)
    zz = sum(z[i] * z[(i + 1) % n] for i in range(n))

    H = np.zeros((dim, dim))
    H[states, states] = spec.coupling * zz
    for i in range(n):
        H[states ^ (1 << i), states] += spec.field
    return H


def diagonalize(H: np.ndarray, *, vectors: bool = True) -> Spectrum:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("Hamiltonian must be square")
    if not np.allclose(H, H.conj().T, rtol=0, atol=1e-10):
        raise ValueError("Hamiltonian is not Hermitian")
    if vectors:
        w, v = np.linalg.eigh(H)
        return Spectrum(w, v)
    return Spectrum(np.linalg.eigvalsh(H))


def solve(spec: HamiltonianSpec, *, vectors: bool = True) -> Spectrum:
    """``diagonalize(build_tfim(spec))``."""
    return diagonalize(build_tfim(spec), vectors=vectors)


def energy_window(spec: HamiltonianSpec) -> EnergyWindow:
    """Symmetric window from the triangle bound on the Pauli-term norms."""
    e_hi = spec.n_spins * (abs(spec.coupling) + abs(spec.field))
    if e_hi == 0:
        # H = 0; any window around 0 holds the spectrum
        e_hi = 1.0
    return EnergyWindow(-e_hi, e_hi)


def exact_thermo(spectrum: Spectrum, beta) -> ThermoCurves:
    e = spectrum.eigenvalues
    return canonical_curves(e, np.zeros_like(e), beta)


def brute_force_dos(spectrum: Spectrum, bins: BinSpec) -> np.ndarray:
    """Number of eigenvalues in each bin."""
    idx = bin_indices(spectrum.eigenvalues, bins)
    return np.bincount(idx, minlength=bins.ell)


def write_spectrum(spectrum: Spectrum, spec: HamiltonianSpec, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(format_spectrum(spectrum, spec))
    return path


def format_spectrum(spectrum: Spectrum, spec: HamiltonianSpec) -> str:
    lines = [f"# {spec.n_spins} {spec.coupling!r} {spec.field!r}"]
    lines += [f"{e:.15g}" for e in spectrum.eigenvalues]
    return "\n".join(lines) + "\n"


def read_spectrum(path) -> tuple[HamiltonianSpec, Spectrum]:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '# N J h' header")
        n, j, h = header[1:].split()
        values = np.array([float(line) for line in fh if line.strip()])
    return HamiltonianSpec(int(n), float(j), float(h)), Spectrum(values)
