"""Energy windows and the uniform energy binning shared by the samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Values this close (relative to the bin width) below an edge are snapped
# up onto it, so eigenvalues such as -1e-16 and 0 land in the same bin.
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class EnergyWindow:
    e_lo: float
    e_hi: float

    def __post_init__(self):
        if not (np.isfinite(self.e_lo) and np.isfinite(self.e_hi)):
            raise ValueError("window edges must be finite")
        if not self.e_lo < self.e_hi:
            raise ValueError(f"need e_lo < e_hi, got ({self.e_lo}, {self.e_hi})")

    @property
    def width(self) -> float:
        return self.e_hi - self.e_lo

    def contains(self, energies, tol: float = 1e-9) -> bool:
        e = np.asarray(energies, dtype=float)
        return bool(np.all(e >= self.e_lo - tol) and np.all(e <= self.e_hi + tol))


@dataclass(frozen=True)
class BinSpec:
    """``ell`` equal-width bins over ``window``; the last bin is closed above."""

    ell: int
    window: EnergyWindow

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"ell must be a positive integer, got {self.ell}")

    @property
    def width(self) -> float:
        return self.window.width / self.ell

    @property
    def edges(self) -> np.ndarray:
        return self.window.e_lo + self.width * np.arange(self.ell + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.window.e_lo + self.width * (np.arange(self.ell) + 0.5)


def bin_indices(energies, bins: BinSpec) -> np.ndarray:
    """Vectorised :func:`bin_of`."""
    e = np.asarray(energies, dtype=float)
    lo, hi = bins.window.e_lo, bins.window.e_hi
    tol = EDGE_TOL * max(1.0, bins.window.width)
    if np.any(e < lo - tol) or np.any(e > hi + tol):
        bad = e[(e < lo - tol) | (e > hi + tol)]
        raise ValueError(f"energy {bad.flat[0]!r} outside window [{lo}, {hi}]")
    idx = np.floor((e - lo) / bins.width + EDGE_TOL).astype(np.int64)
    return np.clip(idx, 0, bins.ell - 1)


def bin_of(energy: float, bins: BinSpec) -> int:
    """Index of the half-open bin ``[e_lo + i*w, e_lo + (i+1)*w)`` holding ``energy``.

    ``e_hi`` itself belongs to the last bin. Energies within ``EDGE_TOL`` of
    the window are clamped; anything further out raises ``ValueError``.
    """
    return int(bin_indices(np.array([energy]), bins)[0])
