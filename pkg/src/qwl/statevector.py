"""A small multi-register statevector simulator.

Layout: registers are stored in layout order with the first register in the
most significant bits of the global index. Within a register, qubit 0 is the
least significant bit of the register label.

Public operations take a :class:`StateVector` and return a new one; the
input is never modified. The ``*_inplace`` helpers mutate a flat amplitude
array and are what circuits use internally so that a whole circuit costs a
single copy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels

MAX_QUBITS = 26
NORM_TOL = 1e-10

_H = 1 / np.sqrt(2.0)


@dataclass(frozen=True)
class Layout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        for name, w in self.registers:
            if int(w) != w or w < 1:
                raise ValueError(f"register {name!r} needs a positive width, got {w}")
        if self.n_qubits > MAX_QUBITS:
            raise ValueError(
                f"layout needs {self.n_qubits} qubits; the simulator guard is {MAX_QUBITS}"
            )
        shifts, acc = {}, 0
        for name, w in reversed(self.registers):
            shifts[name] = (acc, w)
            acc += w
        object.__setattr__(self, "_shifts", shifts)

    @classmethod
    def of(cls, *registers) -> Layout:
        """``Layout.of(("system", 2), ("phase", 4))`` or ``Layout.of(2, 4)``.

        Bare widths get the names ``r0, r1, ...``.
        """
        regs = tuple(r if isinstance(r, tuple) else (f"r{i}", r) for i, r in enumerate(registers))
        return cls(regs)

    @property
    def n_qubits(self) -> int:
        return sum(w for _, w in self.registers)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def width(self, reg: str) -> int:
        return self._lookup(reg)[1]

    def shift(self, reg: str) -> int:
        """Global bit position of qubit 0 of ``reg``."""
        return self._lookup(reg)[0]

    def stride(self, reg: str, qubit: int) -> int:
        if not 0 <= qubit < self.width(reg):
            raise ValueError(f"qubit {qubit} out of range for register {reg!r}")
        return 1 << (self.shift(reg) + qubit)

    def shape3(self, reg: str) -> tuple[int, int, int]:
        """``(outer, 2**width, inner)`` view shape isolating ``reg``."""
        s = self.shift(reg)
        w = self.width(reg)
        return (self.dim >> (s + w), 1 << w, 1 << s)

    def _lookup(self, reg: str) -> tuple[int, int]:
        try:
            return self._shifts[reg]
        except KeyError:
            raise KeyError(f"no register named {reg!r}") from None


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    layout: Layout

    def __post_init__(self):
        if self.amplitudes.shape != (self.layout.dim,):
            raise ValueError("amplitude array does not match layout")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self, reg: str) -> np.ndarray:
        return register_probabilities(self.amplitudes, self.layout, reg)


def prepare_zero(layout: Layout) -> StateVector:
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps, layout)


def prepare_register(layout: Layout, reg: str, vector) -> StateVector:
    """All registers zero except ``reg``, which holds the normalised ``vector``."""
    vector = np.asarray(vector, dtype=np.complex128)
    if vector.shape != (1 << layout.width(reg),):
        raise ValueError("vector does not match register width")
    if abs(np.linalg.norm(vector) - 1) > NORM_TOL:
        raise ValueError("vector is not normalised")
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps.reshape(layout.shape3(reg))[0, :, 0] = vector
    return StateVector(amps, layout)


def prepare_maximally_entangled(state: StateVector, reg_a: str, reg_b: str) -> StateVector:
    """Map ``|0>_a |0>_b`` to ``2^{-n/2} sum_x |x>_a |x>_b``.

    Hadamard on every qubit of ``reg_a``, then CNOT from qubit k of ``reg_a``
    to qubit k of ``reg_b``.
    """
    lay = state.layout
    n = lay.width(reg_a)
    if lay.width(reg_b) != n:
        raise ValueError(f"register widths differ: {n} vs {lay.width(reg_b)}")
    for reg in (reg_a, reg_b):
        p = register_probabilities(state.amplitudes, lay, reg)
        if abs(p[0] - 1) > NORM_TOL:
            raise ValueError(f"register {reg!r} is not in the all-zero state")
    v = state.amplitudes.copy()
    entangle_inplace(v, lay, reg_a, reg_b)
    return StateVector(v, lay)


def entangle_inplace(v, layout: Layout, reg_a: str, reg_b: str) -> None:
    for q in range(layout.width(reg_a)):
        hadamard_inplace(v, layout.stride(reg_a, q))
    for q in range(layout.width(reg_a)):
        _kernels.apply_cnot(v, layout.stride(reg_a, q), layout.stride(reg_b, q))


def hadamard(state: StateVector, reg: str, qubit: int) -> StateVector:
    v = state.amplitudes.copy()
    hadamard_inplace(v, state.layout.stride(reg, qubit))
    return StateVector(v, state.layout)


def hadamard_inplace(v, stride: int) -> None:
    _kernels.apply_1q(v, stride, _H, _H, _H, -_H)


def cnot(state: StateVector, control: tuple[str, int], target: tuple[str, int]) -> StateVector:
    lay = state.layout
    cs, ts = lay.stride(*control), lay.stride(*target)
    if cs == ts:
        raise ValueError("control and target must differ")
    v = state.amplitudes.copy()
    _kernels.apply_cnot(v, cs, ts)
    return StateVector(v, lay)


def apply_register_unitary(state: StateVector, reg: str, U) -> StateVector:
    U = _check_unitary(U, state.layout.width(reg))
    v = state.amplitudes.copy()
    register_unitary_inplace(v, state.layout, reg, U)
    return StateVector(v, state.layout)


def register_unitary_inplace(v, layout: Layout, reg: str, U) -> None:
    t = v.reshape(layout.shape3(reg))
    t[...] = np.einsum("ij,ajb->aib", U, t)


def apply_controlled_unitary(state: StateVector, control: tuple[str, int], target_reg: str, U
                             ) -> StateVector:
    """Apply ``U`` to ``target_reg`` on the branch where the control qubit is 1."""
    lay = state.layout
    U = _check_unitary(U, lay.width(target_reg))
    if control[0] == target_reg:
        raise ValueError("control qubit lies inside the target register")
    v = state.amplitudes.copy()
    controlled_unitary_inplace(v, lay, lay.stride(*control), target_reg, U)
    return StateVector(v, lay)


def controlled_unitary_inplace(v, layout: Layout, cstride: int, target_reg: str, U) -> None:
    shape = layout.shape3(target_reg)
    oi, ii = _control_columns(shape, cstride)
    t = v.reshape(shape)
    t[oi, :, ii] = t[oi, :, ii] @ U.T


@lru_cache(maxsize=256)
def _control_columns(shape, cstride):
    outer, d, inner = shape
    # flat index of each (outer, inner) column; the control bit lives in one of them
    cols = np.arange(outer)[:, None] * (d * inner) + np.arange(inner)[None, :]
    return np.nonzero((cols & cstride) != 0)


def controlled_diagonal_inplace(v, layout: Layout, cstride: int, target_reg: str, phases) -> None:
    """Controlled diagonal unitary ``diag(phases)`` on ``target_reg``."""
    _kernels.apply_controlled_diag(
        v, cstride, layout.shift(target_reg), (1 << layout.width(target_reg)) - 1,
        np.ascontiguousarray(phases, dtype=np.complex128),
    )


def inverse_qft(state: StateVector, reg: str) -> StateVector:
    """Apply F^dagger with F[m, j] = 2^{-k/2} exp(2 pi i m j / 2^k) to ``reg``."""
    v = state.amplitudes.copy()
    inverse_qft_inplace(v, state.layout, reg)
    return StateVector(v, state.layout)


def qft(state: StateVector, reg: str) -> StateVector:
    v = state.amplitudes.copy()
    t = v.reshape(state.layout.shape3(reg))
    t[...] = np.fft.ifft(t, axis=1, norm="ortho")
    return StateVector(v, state.layout)


def inverse_qft_inplace(v, layout: Layout, reg: str) -> None:
    # numpy's forward FFT carries exp(-2 pi i m j / K), i.e. exactly F^dagger
    t = v.reshape(layout.shape3(reg))
    t[...] = np.fft.fft(t, axis=1, norm="ortho")


def register_probabilities(v, layout: Layout, reg: str) -> np.ndarray:
    t = v.reshape(layout.shape3(reg))
    return (t.real**2 + t.imag**2).sum(axis=(0, 2))


def draw_outcome(probs, rng) -> int:
    cdf = np.cumsum(probs)
    total = cdf[-1]
    if not total > 1e-300:
        raise FloatingPointError("measurement marginal vanished")
    m = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    return min(m, probs.size - 1)


def measure_register(state: StateVector, reg: str, rng) -> tuple[int, StateVector]:
    """Projective measurement of ``reg`` in the computational basis."""
    lay = state.layout
    probs = register_probabilities(state.amplitudes, lay, reg)
    m = draw_outcome(probs, rng)
    v = np.zeros_like(state.amplitudes)
    src = state.amplitudes.reshape(lay.shape3(reg))
    v.reshape(lay.shape3(reg))[:, m, :] = src[:, m, :] / np.sqrt(probs[m])
    return m, StateVector(v, lay)


def _check_unitary(U, width: int) -> np.ndarray:
    U = np.asarray(U, dtype=np.complex128)
    d = 1 << width
    if U.shape != (d, d):
        raise ValueError(f"unitary of shape {U.shape} does not act on {width} qubits")
    if not np.allclose(U.conj().T @ U, np.eye(d), rtol=0, atol=1e-10):
        raise ValueError("matrix is not unitary")
    return U
