"""Wang-Landau flat-histogram sampling over energy bins.

Both drivers share the same bookkeeping: a proposal is accepted with
probability ``min(1, g(E_i)/g(E_j))``; the bin the walker ends up in (the new
one on acceptance, the old one on rejection) gets ``ln g += ln f`` and one
histogram count. Every ``steps_per_check`` steps the histogram is tested for
flatness; a flat histogram is reset and ``ln f`` is multiplied by ``gamma``
(``f -> f**gamma``), which ends the round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .binning import EDGE_TOL, BinSpec, EnergyWindow, bin_indices, bin_of
from .hamiltonian import Spectrum
from .qpe import QpeConfig, QpeSampler

__all__ = [
    "BinSpec", "EnergyWindow", "bin_of", "bin_indices",
    "WlConfig", "DosEstimate", "Histogram", "WlTrace", "IsingChain",
    "wl_accept", "wl_update", "check_histogram", "normalize_ln_g",
    "run_quantum_wl", "run_classical_wl", "default_bins",
]


@dataclass(frozen=True)
class WlConfig:
    bin_spec: BinSpec
    ln_f_init: float = 1.0
    gamma: float = 0.5
    flatness: float = 0.8
    steps_per_check: int = 10_000
    max_rounds: int = 18
    # hard stop; a run that hits it reports rounds_completed < max_rounds
    max_steps: int = 100_000_000

    def __post_init__(self):
        if not self.ln_f_init > 0:
            raise ValueError("ln_f_init must be > 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.flatness < 1:
            raise ValueError("flatness must lie in (0, 1)")
        for name in ("steps_per_check", "max_rounds", "max_steps"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")


def default_bins(window: EnergyWindow, k: int) -> BinSpec:
    """``min(2^k, 64) - 1`` bins.

    The count is odd so the window midpoint sits at a bin centre: the QPE
    readout of an energy at the midpoint always splits evenly between the two
    neighbouring outcomes, which must not fall into different bins.
    """
    return BinSpec(max(1, min(1 << k, 64) - 1), window)


@dataclass
class DosEstimate:
    ln_g: np.ndarray
    visited: np.ndarray

    @classmethod
    def empty(cls, ell: int) -> DosEstimate:
        return cls(np.zeros(ell), np.zeros(ell, dtype=bool))


@dataclass
class Histogram:
    counts: np.ndarray

    @classmethod
    def empty(cls, ell: int) -> Histogram:
        return cls(np.zeros(ell, dtype=np.int64))


@dataclass
class WlTrace:
    """Per-round summary, plus per-step records when requested."""

    round_ln_f: list[float] = field(default_factory=list)
    round_steps: list[int] = field(default_factory=list)
    total_steps: int = 0
    accepted: int = 0
    rounds_completed: int = 0
    initial_bin: int = -1
    initial_energy: float = float("nan")
    step_round: np.ndarray | None = None
    step_bin: np.ndarray | None = None
    step_energy: np.ndarray | None = None
    step_accepted: np.ndarray | None = None


def wl_accept(ln_g_i: float, ln_g_j: float, u: float) -> bool:
    """``u < min(1, exp(ln_g_i - ln_g_j))``."""
    return u < min(1.0, math.exp(min(ln_g_i - ln_g_j, 0.0)))


def wl_update(dos: DosEstimate, hist: Histogram, bin: int, ln_f: float) -> None:
    dos.ln_g[bin] += ln_f
    dos.visited[bin] = True
    hist.counts[bin] += 1


def check_histogram(counts, visited, flatness: float) -> bool:
    """Flatness test over visited bins.

    Not flat iff some visited bin has ``h < c*mean`` or ``h > (2 - c)*mean``;
    values exactly on the bounds count as flat.
    """
    counts = np.asarray(counts)
    visited = np.asarray(visited, dtype=bool)
    if not visited.any():
        raise ValueError("no visited bins to check")
    h = counts[visited].astype(float)
    mean = h.mean()
    return not bool(np.any(h < flatness * mean) or np.any(h > (2 - flatness) * mean))


def normalize_ln_g(ln_g, visited, n_states: float) -> np.ndarray:
    """Shift ln g so that ``sum(exp(ln_g))`` over visited bins is ``n_states``.

    Unvisited bins are set to ``-inf``.
    """
    ln_g = np.asarray(ln_g, dtype=float)
    visited = np.asarray(visited, dtype=bool)
    v = ln_g[visited]
    m = v.max()
    total = m + np.log(np.exp(v - m).sum())
    out = np.full_like(ln_g, -np.inf)
    out[visited] = v - total + np.log(n_states)
    return out


class _Recorder:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.chunks: list[tuple] = []

    def buffers(self, n: int):
        size = n if self.enabled else 0
        return np.empty(size, np.int64), np.empty(size), np.empty(size, np.bool_)

    def keep(self, rnd, bufs):
        if self.enabled:
            self.chunks.append((np.full(bufs[0].size, rnd, np.int32), *bufs))

    def finish(self, trace: WlTrace):
        if not self.enabled:
            return
        if self.chunks:
            parts = list(zip(*self.chunks))
            trace.step_round, trace.step_bin, trace.step_energy, trace.step_accepted = (
                np.concatenate(p) for p in parts
            )
        else:
            trace.step_round = np.empty(0, np.int32)
            trace.step_bin = np.empty(0, np.int64)
            trace.step_energy = np.empty(0)
            trace.step_accepted = np.empty(0, np.bool_)


def _drive(cfg: WlConfig, block, record_steps: bool) -> tuple[DosEstimate, WlTrace]:
    """Round/flatness control shared by both drivers.

    ``block(n, ln_g, counts, visited, ln_f, rec)`` runs ``n`` steps and
    returns the number accepted.
    """
    ell = cfg.bin_spec.ell
    dos = DosEstimate.empty(ell)
    hist = Histogram.empty(ell)
    trace = WlTrace()
    rec = _Recorder(record_steps)
    ln_f = cfg.ln_f_init
    rnd = 0
    steps_in_round = 0
    while rnd < cfg.max_rounds and trace.total_steps < cfg.max_steps:
        n = min(cfg.steps_per_check, cfg.max_steps - trace.total_steps)
        bufs = rec.buffers(n)
        trace.accepted += block(n, dos.ln_g, hist.counts, dos.visited, ln_f, bufs)
        rec.keep(rnd, bufs)
        trace.total_steps += n
        steps_in_round += n
        if check_histogram(hist.counts, dos.visited, cfg.flatness):
            hist.counts[:] = 0
            trace.round_ln_f.append(ln_f)
            trace.round_steps.append(steps_in_round)
            ln_f = cfg.ln_f_init * cfg.gamma ** (rnd + 1)
            rnd += 1
            steps_in_round = 0
    trace.rounds_completed = rnd
    rec.finish(trace)
    return dos, trace


def run_quantum_wl(spectrum: Spectrum, qpe_cfg: QpeConfig, wl_cfg: WlConfig, rng,
                   sampler=None, record_steps: bool = False) -> tuple[DosEstimate, WlTrace]:
    """Wang-Landau with phase-estimation proposals.

    Each step prepares the infinite-temperature pair state, measures an energy
    by phase estimation and accepts or rejects it against the current one.
    Proposals never depend on the current state, so a batch of them is drawn
    up front for every ``steps_per_check`` block.

    ``sampler`` defaults to a :class:`~qwl.qpe.QpeSampler`; any object with
    ``sample_batch(rng, n) -> (eigen_index, outcome)`` and an
    ``outcome_energies`` table can stand in for it. The returned ``ln_g`` is
    normalised to ``2^N`` states over visited bins.
    """
    if sampler is None:
        sampler = QpeSampler(spectrum, qpe_cfg)
    bins = wl_cfg.bin_spec
    if abs(bins.window.e_lo - qpe_cfg.window.e_lo) > 1e-12 or abs(
        bins.window.e_hi - qpe_cfg.window.e_hi
    ) > 1e-12:
        raise ValueError("WL bins and QPE config use different energy windows")
    energies = np.asarray(sampler.outcome_energies, dtype=float)
    outcome_bin = bin_indices(energies, bins)

    idx0, m0 = sampler.sample_batch(rng, 1)
    state = [int(outcome_bin[m0[0]]), float(energies[m0[0]]), int(idx0[0])]

    def block(n, ln_g, counts, visited, ln_f, bufs):
        idx, m = sampler.sample_batch(rng, n)
        u = rng.random(n)
        b, e, i, n_acc = _kernels.wl_block(
            outcome_bin[m], energies[m], idx, u, ln_g, counts, visited,
            state[0], state[1], state[2], ln_f, *bufs,
        )
        state[:] = [b, e, i]
        return n_acc

    dos, trace = _drive(wl_cfg, block, record_steps)
    trace.initial_bin = int(outcome_bin[m0[0]])
    trace.initial_energy = float(energies[m0[0]])
    dos.ln_g = normalize_ln_g(dos.ln_g, dos.visited, spectrum.dim) if dos.visited.any() else dos.ln_g
    return dos, trace


@dataclass(frozen=True)
class IsingChain:
    """Classical periodic Ising chain ``E = J sum s_i s_{i+1} + h sum s_i``.

    Configurations ``X`` are vectors in ``{-1, +1}^N``; the move set is the
    ``N`` single-spin flips.
    """

    n_spins: int
    coupling: float = 2.0
    field: float = 0.0

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=float)
        return float(self.coupling * np.dot(s, np.roll(s, -1)) + self.field * s.sum())

    def all_energies(self) -> np.ndarray:
        n = self.n_spins
        states = np.arange(1 << n)
        s = 1 - 2 * ((states[:, None] >> np.arange(n)[None, :]) & 1)
        return self.coupling * (s * np.roll(s, -1, axis=1)).sum(1) + self.field * s.sum(1)

    def window(self) -> EnergyWindow:
        e_hi = self.n_spins * (abs(self.coupling) + abs(self.field))
        return EnergyWindow(-e_hi - 1.0, e_hi + 1.0)

    def level_bins(self) -> BinSpec:
        """One bin per attainable level when ``field == 0``.

        Levels are ``J (N - 2d)`` for an even number ``d`` of domain walls,
        i.e. spaced by ``4|J|``.
        """
        if self.field != 0 or self.coupling == 0:
            raise ValueError("level bins need field == 0 and coupling != 0")
        step = 4 * abs(self.coupling)
        levels = np.unique(np.round(self.all_energies(), 9))
        lo, hi = levels[0] - step / 2, levels[-1] + step / 2
        return BinSpec(int(round((hi - lo) / step)), EnergyWindow(lo, hi))


def run_classical_wl(model: IsingChain, wl_cfg: WlConfig, rng, record_steps: bool = False
                     ) -> tuple[DosEstimate, WlTrace]:
    """Wang-Landau on a classical chain with random single-spin-flip moves."""
    bins = wl_cfg.bin_spec
    spins = rng.choice(np.array([-1, 1], dtype=np.int64), size=model.n_spins)
    state = [model.energy(spins)]
    start_bin = bin_of(state[0], bins)  # raises if the start lies outside the window
    tol = EDGE_TOL

    def block(n, ln_g, counts, visited, ln_f, bufs):
        sites = rng.integers(model.n_spins, size=n)
        u = rng.random(n)
        e, n_acc = _kernels.ising_wl_block(
            spins, state[0], float(model.coupling), float(model.field), sites, u,
            ln_g, counts, visited, bins.window.e_lo, bins.width, bins.ell, tol, ln_f, *bufs,
        )
        state[0] = e
        return n_acc

    initial_energy = state[0]
    dos, trace = _drive(wl_cfg, block, record_steps)
    trace.initial_bin = start_bin
    trace.initial_energy = initial_energy
    dos.ln_g = normalize_ln_g(dos.ln_g, dos.visited, 2.0**model.n_spins)
    return dos, trace


DOS_COLUMNS = ("bin_index", "e_center", "ln_g_normalized", "visited")
TRACE_COLUMNS = ("step", "round", "bin", "energy", "accepted")


def write_dos(dos: DosEstimate, bins: BinSpec, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(DOS_COLUMNS) + "\n")
        for i, (c, lg, v) in enumerate(zip(bins.centers, dos.ln_g, dos.visited)):
            lg_s = repr(float(lg)) if v else "-inf"
            fh.write(f"{i},{float(c)!r},{lg_s},{int(v)}\n")
    return path


def read_dos(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(e_center, ln_g, visited)``."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data["e_center"], data["ln_g_normalized"], data["visited"].astype(bool)


def write_trace(trace: WlTrace, path) -> Path:
    if trace.step_bin is None:
        raise ValueError("trace was run without record_steps=True")
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for s, (r, b, e, a) in enumerate(
            zip(trace.step_round, trace.step_bin, trace.step_energy, trace.step_accepted)
        ):
            fh.write(f"{s},{int(r)},{int(b)},{float(e)!r},{int(a)}\n")
    return path
