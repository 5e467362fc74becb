"""Phase estimation as an energy sampler.

The evolution ``U = exp(i (H - e_lo) t)`` with ``t = 2 pi (1 - 2^-k) / (e_hi - e_lo)``
maps the energy window affinely onto phases ``[0, 1 - 2^-k]``, so eigenphases
never wrap and outcome ``m`` reads back as ``e_lo + m (e_hi - e_lo) / (2^k - 1)``.

Three interchangeable tiers produce the same ``(eigen_index, outcome)``
distribution:

``pair_statevector``
    System and copy registers prepared in ``2^{-N/2} sum_x |x>|x>``, QPE on
    the system register. The eigen index is read off afterwards by measuring
    the untouched copy register in the conjugate eigenbasis.
``eigen_statevector``
    Uniformly drawn eigenvector loaded into the system register, then the
    same QPE circuit. The system register is simulated in the energy
    eigenbasis, where every controlled ``U^(2^j)`` is diagonal.
``analytic``
    Uniform eigen index, outcome from the closed-form QPE distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .binning import EnergyWindow
from .hamiltonian import Spectrum

TIERS = ("pair_statevector", "eigen_statevector", "analytic")


@dataclass(frozen=True)
class QpeConfig:
    k: int
    window: EnergyWindow
    tier: str = "analytic"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"phase register width must be >= 1, got {self.k}")
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}; choose from {TIERS}")

    @property
    def t(self) -> float:
        return 2 * np.pi * (1 - 2.0**-self.k) / self.window.width

    @property
    def spacing(self) -> float:
        """Energy between neighbouring outcomes."""
        return self.window.width / ((1 << self.k) - 1)

    def qubits_needed(self, n_spins: int) -> int:
        if self.tier == "pair_statevector":
            return 2 * n_spins + self.k
        if self.tier == "eigen_statevector":
            return n_spins + self.k
        return 0


@dataclass(frozen=True)
class QpeSample:
    outcome_m: int
    energy: float
    eigen_index: int | None = None


def phase_of_energy(energy, cfg: QpeConfig):
    e = np.asarray(energy, dtype=float)
    w = cfg.window
    tol = 1e-9 * max(1.0, w.width)
    if np.any(e < w.e_lo - tol) or np.any(e > w.e_hi + tol):
        raise ValueError(f"energy outside window [{w.e_lo}, {w.e_hi}]")
    phi = (e - w.e_lo) * (1 - 2.0**-cfg.k) / w.width
    phi = np.clip(phi, 0.0, 1 - 2.0**-cfg.k)
    return float(phi) if phi.ndim == 0 else phi


def energy_of_outcome(m, cfg: QpeConfig):
    m_arr = np.asarray(m)
    if np.any(m_arr < 0) or np.any(m_arr >= 1 << cfg.k):
        raise ValueError(f"outcome out of range for k={cfg.k}")
    # written as e_lo + m * spacing so m = 2^k - 1 lands on e_hi
    e = cfg.window.e_lo + m_arr * cfg.window.width / ((1 << cfg.k) - 1)
    return float(e) if e.ndim == 0 else e


def analytic_outcome_distribution(phi: float, k: int) -> np.ndarray:
    """Exact outcome probabilities of k-qubit QPE on an eigenphase ``phi``."""
    if not 0 <= phi < 1:
        raise ValueError(f"phase must lie in [0, 1), got {phi}")
    K = 1 << k
    delta = phi - np.arange(K) / K
    num = np.sin(K * np.pi * delta)
    den = K * np.sin(np.pi * delta)
    p = np.empty(K)
    exact = np.abs(den) < 1e-12
    p[exact] = 1.0
    p[~exact] = (num[~exact] / den[~exact]) ** 2
    return p


def evolution_powers(spectrum: Spectrum, cfg: QpeConfig) -> list[np.ndarray]:
    """Dense ``U^(2^j)``, j = 0..k-1, by repeated squaring of ``U``."""
    V = spectrum.eigenvectors
    if V is None:
        raise ValueError("statevector tiers need eigenvectors")
    lam = spectrum.eigenvalues - cfg.window.e_lo
    U = (V * np.exp(1j * lam * cfg.t)) @ V.conj().T
    powers = [U]
    for _ in range(cfg.k - 1):
        powers.append(powers[-1] @ powers[-1])
    return powers


def qpe_circuit_inplace(v, layout: sv.Layout, phase_reg: str, controlled) -> None:
    """Hadamards on the phase register, the controlled-power ladder, inverse QFT.

    ``controlled(v, cstride, j)`` applies controlled ``U^(2^j)``.
    """
    k = layout.width(phase_reg)
    for j in range(k):
        sv.hadamard_inplace(v, layout.stride(phase_reg, j))
    for j in range(k):
        controlled(v, layout.stride(phase_reg, j), j)
    sv.inverse_qft_inplace(v, layout, phase_reg)


class QpeSampler:
    """Draws ``(eigen_index, outcome)`` pairs for one spectrum and config.

    Per-configuration setup (evolution powers, outcome tables) is done once
    here and is read-only afterwards.
    """

    def __init__(self, spectrum: Spectrum, cfg: QpeConfig):
        if not cfg.window.contains(spectrum.eigenvalues):
            raise ValueError("spectrum does not fit in the QPE window")
        n = spectrum.n_spins
        need = cfg.qubits_needed(n)
        if need > sv.MAX_QUBITS:
            raise ValueError(
                f"tier {cfg.tier} needs {need} qubits for N={n}, k={cfg.k}; "
                f"the simulator guard is {sv.MAX_QUBITS}"
            )
        if cfg.tier == "analytic" and n + cfg.k > sv.MAX_QUBITS:
            raise ValueError(f"analytic outcome table 2^{n + cfg.k} exceeds the guard")
        self.spectrum = spectrum
        self.cfg = cfg
        self.n_spins = n
        self.n_states = spectrum.dim
        self.outcome_energies = energy_of_outcome(np.arange(1 << cfg.k), cfg)
        self._phases = phase_of_energy(spectrum.eigenvalues, cfg)
        self._cdf = None
        self._powers = None
        self._diag_phases = None
        if cfg.tier == "pair_statevector":
            self.layout = sv.Layout.of(("system", n), ("copy", n), ("phase", cfg.k))
            self._powers = evolution_powers(spectrum, cfg)
            # rotates the copy register's conjugate eigenbasis onto labels
            self._copy_readout = spectrum.eigenvectors.T.astype(np.complex128)
        elif cfg.tier == "eigen_statevector":
            self.layout = sv.Layout.of(("system", n), ("phase", cfg.k))
            lam = spectrum.eigenvalues - cfg.window.e_lo
            self._diag_phases = [np.exp(1j * lam * cfg.t * 2.0**j) for j in range(cfg.k)]

    # -- single-sample circuits ------------------------------------------------

    def outcome_distribution(self, eigen_index: int) -> np.ndarray:
        return analytic_outcome_distribution(self._phases[eigen_index], self.cfg.k)

    def eigen_circuit_probabilities(self, eigen_index: int, frame: str = "eigen") -> np.ndarray:
        """Phase-register marginal after QPE on eigenvector ``eigen_index``.

        ``frame="eigen"`` is what the eigen tier samples from; ``"computational"``
        loads the eigenvector's amplitudes and uses the dense powers, as a check.
        """
        lay = sv.Layout.of(("system", self.n_spins), ("phase", self.cfg.k))
        if frame == "eigen":
            vec = np.zeros(self.n_states, dtype=np.complex128)
            vec[eigen_index] = 1.0
            phases = self._diag_phases or [
                np.exp(1j * (self.spectrum.eigenvalues - self.cfg.window.e_lo) * self.cfg.t * 2.0**j)
                for j in range(self.cfg.k)
            ]

            def controlled(v, cs, j):
                sv.controlled_diagonal_inplace(v, lay, cs, "system", phases[j])
        elif frame == "computational":
            if self.spectrum.eigenvectors is None:
                raise ValueError("the computational frame needs eigenvectors")
            vec = self.spectrum.eigenvectors[:, eigen_index]
            powers = self._powers or evolution_powers(self.spectrum, self.cfg)

            def controlled(v, cs, j):
                sv.controlled_unitary_inplace(v, lay, cs, "system", powers[j])
        else:
            raise ValueError(f"unknown frame {frame!r}")
        v = sv.prepare_register(lay, "system", vec).amplitudes
        qpe_circuit_inplace(v, lay, "phase", controlled)
        return sv.register_probabilities(v, lay, "phase")

    def joint_distribution(self) -> np.ndarray:
        """Exact ``P(eigen_index, outcome)`` as a ``(2^N, 2^k)`` array.

        The pair tier reads it off its own circuit (system traced out, copy
        register rotated to eigen labels); the other tiers use the closed form.
        """
        if self.cfg.tier != "pair_statevector":
            return np.stack([self.outcome_distribution(i) for i in range(self.n_states)]) / self.n_states
        v = self._pair_state()
        sv.register_unitary_inplace(v, self.layout, "copy", self._copy_readout)
        t = v.reshape(self.n_states, self.n_states, 1 << self.cfg.k)
        return (t.real**2 + t.imag**2).sum(axis=0)

    def _pair_state(self) -> np.ndarray:
        lay = self.layout
        v = sv.prepare_zero(lay).amplitudes
        sv.entangle_inplace(v, lay, "system", "copy")
        powers = self._powers

        def controlled(v, cs, j):
            sv.controlled_unitary_inplace(v, lay, cs, "system", powers[j])

        qpe_circuit_inplace(v, lay, "phase", controlled)
        return v

    def _sample_pair(self, rng) -> tuple[int, int]:
        lay = self.layout
        state = sv.StateVector(self._pair_state(), lay)
        m, state = sv.measure_register(state, "phase", rng)
        sv.register_unitary_inplace(state.amplitudes, lay, "copy", self._copy_readout)
        i, _ = sv.measure_register(state, "copy", rng)
        return i, m

    def _sample_eigen(self, rng) -> tuple[int, int]:
        i = int(rng.integers(self.n_states))
        probs = self.eigen_circuit_probabilities(i)
        return i, sv.draw_outcome(probs, rng)

    # -- public sampling -------------------------------------------------------

    def sample(self, rng) -> QpeSample:
        i, m = self.sample_batch(rng, 1)
        return QpeSample(int(m[0]), float(self.outcome_energies[m[0]]), int(i[0]))

    def sample_batch(self, rng, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` independent ``(eigen_index, outcome)`` draws."""
        tier = self.cfg.tier
        if tier == "analytic":
            return self._sample_analytic(rng, n)
        draw = self._sample_pair if tier == "pair_statevector" else self._sample_eigen
        idx = np.empty(n, dtype=np.int64)
        out = np.empty(n, dtype=np.int64)
        for s in range(n):
            idx[s], out[s] = draw(rng)
        return idx, out

    def _sample_analytic(self, rng, n):
        if self._cdf is None:
            self._build_cdf()
        K = 1 << self.cfg.k
        idx = rng.integers(self.n_states, size=n)
        u = rng.random(n)
        # rows of the flat table are offset by their index, so one sorted search serves all
        pos = np.searchsorted(self._cdf, idx + u, side="right")
        out = np.clip(pos - idx * K, 0, K - 1)
        return idx.astype(np.int64), out.astype(np.int64)

    def _build_cdf(self):
        K = 1 << self.cfg.k
        table = np.empty((self.n_states, K))
        for i, phi in enumerate(self._phases):
            c = np.cumsum(analytic_outcome_distribution(phi, self.cfg.k))
            table[i] = c / c[-1] + i
            table[i, -1] = i + 1.0
        self._cdf = table.ravel()


def sample_energy(spectrum: Spectrum, cfg: QpeConfig, rng, sampler: QpeSampler | None = None
                  ) -> QpeSample:
    """One phase-estimation energy sample.

    Building a :class:`QpeSampler` is the expensive part; pass one in when
    drawing repeatedly.
    """
    if sampler is None:
        sampler = QpeSampler(spectrum, cfg)
    return sampler.sample(rng)


def mean_abs_error(spectrum: Spectrum, cfg: QpeConfig) -> float:
    """Expected |measured - true| energy, averaged over eigenstates."""
    energies = energy_of_outcome(np.arange(1 << cfg.k), cfg)
    errs = []
    for e in spectrum.eigenvalues:
        p = analytic_outcome_distribution(phase_of_energy(e, cfg), cfg.k)
        errs.append(p @ np.abs(energies - e))
    return float(np.mean(errs))
