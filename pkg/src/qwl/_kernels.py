"""Compiled inner loops. Everything here mutates its array arguments."""

import numba as nb
import numpy as np

# --- statevector gates on a flat amplitude array ---------------------------
# A qubit is addressed by its stride in the flat index (1 << global position).


@nb.njit(cache=True)
def apply_1q(v, stride, m00, m01, m10, m11):
    n = v.size
    for base in range(0, n, 2 * stride):
        for i in range(base, base + stride):
            a = v[i]
            b = v[i + stride]
            v[i] = m00 * a + m01 * b
            v[i + stride] = m10 * a + m11 * b


@nb.njit(cache=True)
def apply_cnot(v, cstride, tstride):
    n = v.size
    for i in range(n):
        if (i & cstride) and not (i & tstride):
            j = i | tstride
            tmp = v[i]
            v[i] = v[j]
            v[j] = tmp


@nb.njit(cache=True)
def apply_controlled_diag(v, cstride, tshift, tmask, phases):
    """Multiply amplitudes with the control bit set by ``phases[target label]``."""
    n = v.size
    for base in range(0, n, 2 * cstride):
        for i in range(base + cstride, base + 2 * cstride):
            v[i] *= phases[(i >> tshift) & tmask]


# --- Wang-Landau ------------------------------------------------------------


@nb.njit(cache=True)
def wl_block(prop_bin, prop_energy, prop_index, uniforms, ln_g, counts, visited,
             cur_bin, cur_energy, cur_index, ln_f, rec_bin, rec_energy, rec_acc):
    """Run ``len(uniforms)`` Wang-Landau steps against pre-drawn proposals.

    Returns the final (bin, energy, eigen index) and the number accepted.
    ``rec_*`` may be length-0 arrays to skip per-step recording.
    """
    record = rec_bin.size > 0
    n_acc = 0
    for s in range(uniforms.size):
        j = prop_bin[s]
        d = ln_g[cur_bin] - ln_g[j]
        acc = d >= 0.0 or uniforms[s] < np.exp(d)
        if acc:
            cur_bin = j
            cur_energy = prop_energy[s]
            cur_index = prop_index[s]
            n_acc += 1
        ln_g[cur_bin] += ln_f
        counts[cur_bin] += 1
        visited[cur_bin] = True
        if record:
            rec_bin[s] = cur_bin
            rec_energy[s] = cur_energy
            rec_acc[s] = acc
    return cur_bin, cur_energy, cur_index, n_acc


@nb.njit(cache=True)
def _bin_index(e, e_lo, width, ell, tol):
    i = int(np.floor((e - e_lo) / width + tol))
    if i < 0:
        return 0
    if i > ell - 1:
        return ell - 1
    return i


@nb.njit(cache=True)
def ising_wl_block(spins, energy, coupling, field, sites, uniforms, ln_g, counts, visited,
                   e_lo, width, ell, tol, ln_f, rec_bin, rec_energy, rec_acc):
    """Single-spin-flip Wang-Landau steps on a periodic classical Ising chain.

    ``spins`` holds +-1 and is updated in place; returns the final energy and
    the number of accepted flips.
    """
    n = spins.size
    record = rec_bin.size > 0
    cur_bin = _bin_index(energy, e_lo, width, ell, tol)
    n_acc = 0
    for s in range(uniforms.size):
        k = sites[s]
        # each site sits on two bonds of the periodic sum (also for n = 2);
        # for n = 1 the only bond is s*s = 1 and never changes
        nb_sum = spins[(k - 1) % n] + spins[(k + 1) % n] if n > 1 else 0
        de = -2.0 * spins[k] * (coupling * nb_sum + field)
        e_new = energy + de
        j = _bin_index(e_new, e_lo, width, ell, tol)
        d = ln_g[cur_bin] - ln_g[j]
        acc = d >= 0.0 or uniforms[s] < np.exp(d)
        if acc:
            spins[k] = -spins[k]
            energy = e_new
            cur_bin = j
            n_acc += 1
        ln_g[cur_bin] += ln_f
        counts[cur_bin] += 1
        visited[cur_bin] = True
        if record:
            rec_bin[s] = cur_bin
            rec_energy[s] = energy
            rec_acc[s] = acc
    return energy, n_acc


# --- Metropolis ---------------------------------------------------------------


@nb.njit(cache=True)
def metropolis_block(prop_energy, prop_index, uniforms, beta, cur_energy, cur_index,
                     out_energy, out_index):
    n_acc = 0
    for s in range(uniforms.size):
        x = -beta * (prop_energy[s] - cur_energy)
        if x >= 0.0 or uniforms[s] < np.exp(x):
            cur_energy = prop_energy[s]
            cur_index = prop_index[s]
            n_acc += 1
        out_energy[s] = cur_energy
        out_index[s] = cur_index
    return cur_energy, cur_index, n_acc
