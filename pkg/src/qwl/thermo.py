"""Canonical thermodynamics from a (binned) density of states.

All partition sums are shifted by their largest exponent before
exponentiation, so large inverse temperatures do not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

QUANTITIES = ("U", "Cv", "S", "F")


@dataclass
class ThermoCurves:
    """Internal energy, heat capacity, entropy and free energy on a beta grid.

    The ``*_sd`` arrays hold per-point standard deviations across runs and
    are zero for single-run or exact curves.
    """

    beta: np.ndarray
    U: np.ndarray
    Cv: np.ndarray
    S: np.ndarray
    F: np.ndarray
    U_sd: np.ndarray = field(default=None)
    Cv_sd: np.ndarray = field(default=None)
    S_sd: np.ndarray = field(default=None)
    F_sd: np.ndarray = field(default=None)

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        n = self.beta.shape[0]
        for name in QUANTITIES:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
            sd = getattr(self, name + "_sd")
            sd = np.zeros(n) if sd is None else np.asarray(sd, dtype=float)
            setattr(self, name + "_sd", sd)

    def __len__(self):
        return self.beta.shape[0]


def check_beta_grid(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.size == 0:
        raise ValueError("beta grid must be a non-empty 1-d array")
    if np.any(beta < 0) or not np.all(np.isfinite(beta)):
        raise ValueError("beta grid must be finite and non-negative")
    if np.any(np.diff(beta) <= 0):
        raise ValueError("beta grid must be strictly ascending")
    return beta


def canonical_curves(energies, ln_weights, beta) -> ThermoCurves:
    """Canonical averages over levels ``energies`` with degeneracies ``exp(ln_weights)``.

    ``S = ln Z + beta*U`` and ``F = -ln Z / beta``; ``F`` is NaN at ``beta = 0``.
    """
    beta = check_beta_grid(beta)
    e = np.asarray(energies, dtype=float)
    lw = np.asarray(ln_weights, dtype=float)
    if e.shape != lw.shape or e.size == 0:
        raise ValueError("energies and ln_weights must be non-empty and aligned")

    expo = lw[None, :] - beta[:, None] * e[None, :]
    shift = expo.max(axis=1)
    w = np.exp(expo - shift[:, None])
    z = w.sum(axis=1)
    p = w / z[:, None]
    U = p @ e
    # centred second moment; <E^2> - U^2 cancels badly when one level dominates
    var = (p * (e[None, :] - U[:, None]) ** 2).sum(axis=1)
    Cv = beta**2 * var
    ln_z = np.log(z) + shift
    S = ln_z + beta * U
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(beta > 0, -ln_z / np.where(beta > 0, beta, 1.0), np.nan)
    return ThermoCurves(beta=beta, U=U, Cv=Cv, S=S, F=F)


def thermo_from_dos(ln_g, visited, bins, beta, n_states: float | None = None) -> ThermoCurves:
    """Thermodynamics from a binned ln g(E), using bin-centre energies.

    Only visited bins enter the sums. If ``n_states`` is given the DOS must
    already be normalised so that ``sum(g) == n_states`` over visited bins.
    """
    ln_g = np.asarray(ln_g, dtype=float)
    visited = np.asarray(visited, dtype=bool)
    if not visited.any():
        raise ValueError("DOS has no visited bins")
    if n_states is not None:
        total = _logsumexp(ln_g[visited])
        if abs(total - np.log(n_states)) > 1e-8:
            raise ValueError(
                f"DOS not normalised: ln sum g = {total:.6g}, expected ln {n_states}"
            )
    return canonical_curves(bins.centers[visited], ln_g[visited], beta)


def entropy_from_cv(beta, cv, beta_cutoff: float | None = None) -> np.ndarray:
    """Entropy as the integral of Cv/beta from each grid point to infinity.

    The integral runs by the trapezoidal rule up to ``beta_cutoff`` (a grid
    point; defaults to the last one). Beyond it the heat capacity is taken to
    fall linearly to zero over one grid spacing, which adds a single final
    trapezoid. Grid points above the cutoff get NaN.
    """
    beta = check_beta_grid(beta)
    cv = np.asarray(cv, dtype=float)
    if cv.shape != beta.shape or not np.all(np.isfinite(cv)):
        raise ValueError("cv must be finite and aligned with beta")
    if beta.size < 2:
        raise ValueError("need at least two grid points to fix the spacing")
    if beta_cutoff is None:
        ic = beta.size - 1
    else:
        if beta_cutoff < beta[0]:
            raise ValueError(f"cutoff {beta_cutoff} below grid start {beta[0]}")
        ic = int(np.argmin(np.abs(beta - beta_cutoff)))
        if abs(beta[ic] - beta_cutoff) > 1e-9 * max(1.0, beta_cutoff):
            raise ValueError(f"cutoff {beta_cutoff} is not a grid point")
    if ic == 0:
        raise ValueError("cutoff must lie above the first grid point")

    # Cv = beta^2 var, so Cv/beta -> 0 at beta = 0
    integrand = np.divide(cv, beta, out=np.zeros_like(cv), where=beta > 0)
    if np.any((beta == 0) & (cv != 0)):
        raise ValueError("non-zero Cv at beta = 0")
    spacing = beta[ic] - beta[ic - 1]
    tail = 0.5 * spacing * integrand[ic]

    b, f = beta[: ic + 1], integrand[: ic + 1]
    pieces = 0.5 * (f[1:] + f[:-1]) * np.diff(b)
    from_point = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    S = np.full(beta.shape, np.nan)
    S[: ic + 1] = from_point + tail
    return S


def free_energy(U, S, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("free energy needs beta > 0 at every point")
    return np.asarray(U, dtype=float) - np.asarray(S, dtype=float) / beta


def aggregate(curves: list[ThermoCurves]) -> ThermoCurves:
    """Per-point mean and sample standard deviation across runs."""
    if not curves:
        raise ValueError("nothing to aggregate")
    beta = curves[0].beta
    for c in curves[1:]:
        if c.beta.shape != beta.shape or not np.allclose(c.beta, beta, rtol=0, atol=1e-12):
            raise ValueError("curves are on different beta grids")
    out = {}
    for name in QUANTITIES:
        stack = np.stack([getattr(c, name) for c in curves])
        out[name] = stack.mean(axis=0)
        out[name + "_sd"] = stack.std(axis=0, ddof=1) if len(curves) > 1 else np.zeros(len(beta))
    return ThermoCurves(beta=beta, **out)


def error_curves(method: ThermoCurves, exact: ThermoCurves) -> ThermoCurves:
    """Pointwise ``method - exact`` with the two sd bands added in quadrature."""
    if method.beta.shape != exact.beta.shape or not np.allclose(
        method.beta, exact.beta, rtol=0, atol=1e-12
    ):
        raise ValueError("beta grids differ")
    out = {}
    for name in QUANTITIES:
        out[name] = getattr(method, name) - getattr(exact, name)
        out[name + "_sd"] = np.hypot(getattr(method, name + "_sd"), getattr(exact, name + "_sd"))
    return ThermoCurves(beta=method.beta, **out)


def rmse(diff: ThermoCurves, name: str) -> float:
    """Root-mean-square of a difference curve, ignoring undefined points."""
    v = getattr(diff, name)
    v = v[np.isfinite(v)]
    return float(np.sqrt(np.mean(v**2))) if v.size else float("nan")


CURVE_COLUMNS = ("beta", "U", "U_sd", "Cv", "Cv_sd", "S", "S_sd", "F", "F_sd")


def write_curves(curves: ThermoCurves, path) -> Path:
    path = Path(path)
    cols = [getattr(curves, c) for c in CURVE_COLUMNS]
    with open(path, "w") as fh:
        fh.write(",".join(CURVE_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def read_curves(path) -> ThermoCurves:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return ThermoCurves(**{c: data[c] for c in CURVE_COLUMNS})


def _fmt(x: float) -> str:
    return "nan" if not np.isfinite(x) else repr(float(x))


def _logsumexp(a) -> float:
    a = np.asarray(a, dtype=float)
    m = a.max()
    return float(m + np.log(np.exp(a - m).sum()))
