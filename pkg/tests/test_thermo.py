import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import direct_thermo
from qwl.binning import BinSpec, EnergyWindow
from qwl.hamiltonian import HamiltonianSpec, exact_thermo, solve
from qwl.thermo import (
    CURVE_COLUMNS, ThermoCurves, aggregate, canonical_curves, entropy_from_cv, error_curves,
    free_energy, read_curves, rmse, thermo_from_dos, write_curves,
)

BETA = np.round(0.05 * np.arange(1, 61), 12)


def two_level(beta, gap=1.0):
    """Closed forms for levels {0, gap}."""
    x = np.exp(-beta * gap)
    U = gap * x / (1 + x)
    Cv = (beta * gap) ** 2 * x / (1 + x) ** 2
    S = np.log(1 + x) + beta * U
    return U, Cv, S


def test_two_level_closed_form():
    c = canonical_curves(np.array([0.0, 1.0]), np.zeros(2), BETA)
    U, Cv, S = two_level(BETA)
    assert np.allclose(c.U, U) and np.allclose(c.Cv, Cv) and np.allclose(c.S, S)
    assert np.allclose(c.F, c.U - c.S / BETA)


def test_exact_thermo_matches_direct_sums(n4_spectrum):
    beta = np.array([0.0, 0.05, 1.0, 3.0])
    c = exact_thermo(n4_spectrum, beta)
    U, Cv, S = direct_thermo(n4_spectrum.eigenvalues, beta)
    assert np.allclose(c.U, U, atol=1e-12) and np.allclose(c.Cv, Cv, atol=1e-12)
    assert np.allclose(c.S, S, atol=1e-12)
    assert c.S[0] == pytest.approx(np.log(16))
    assert np.isnan(c.F[0])


def test_large_beta_is_stable():
    c = canonical_curves(np.array([-100.0, 0.0, 100.0]), np.zeros(3), np.array([50.0]))
    assert c.U[0] == pytest.approx(-100.0) and c.S[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite([c.U, c.Cv, c.S, c.F]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=12),
       st.lists(st.floats(0, 5), min_size=12, max_size=12), st.floats(0.01, 5))
def test_canonical_identities(levels, ln_w, beta):
    e = np.array(levels)
    c = canonical_curves(e, np.array(ln_w[: e.size]), np.array([beta]))
    assert e.min() - 1e-9 <= c.U[0] <= e.max() + 1e-9
    assert c.Cv[0] >= -1e-12
    assert c.F[0] == pytest.approx(c.U[0] - c.S[0] / beta, abs=1e-8)


def test_degeneracy_weights_equal_repeated_levels():
    beta = np.array([0.3, 1.7])
    a = canonical_curves(np.array([-1.0, 2.0]), np.log([3.0, 5.0]), beta)
    b = canonical_curves(np.array([-1.0] * 3 + [2.0] * 5), np.zeros(8), beta)
    for q in ("U", "Cv", "S", "F"):
        assert np.allclose(getattr(a, q), getattr(b, q))


def test_thermo_from_dos_uses_visited_bin_centres():
    bins = BinSpec(4, EnergyWindow(-2.0, 2.0))
    ln_g = np.log([1.0, 0.0 + 1e-300, 3.0, 0.0 + 1e-300])
    visited = np.array([True, False, True, False])
    c = thermo_from_dos(ln_g, visited, bins, BETA, n_states=4)
    ref = canonical_curves(np.array([-1.5, 0.5]), np.log([1.0, 3.0]), BETA)
    assert np.allclose(c.U, ref.U) and np.allclose(c.S, ref.S)
    with pytest.raises(ValueError, match="normalised"):
        thermo_from_dos(ln_g, visited, bins, BETA, n_states=8)


def test_entropy_integral_on_two_level_system():
    beta = np.round(0.01 * np.arange(1, 1501), 12)
    _, Cv, S = two_level(beta)
    est = entropy_from_cv(beta, Cv)
    # S(beta_c) for the two-level system is about 1e-5 at beta_c = 15, so the truncation is harmless
    assert np.max(np.abs(est - S)) < 1e-4


def test_entropy_cutoff_tail_and_nan_above():
    beta = np.array([0.5, 1.0, 1.5, 2.0])
    cv = np.array([4.0, 3.0, 2.0, 1.0])
    S = entropy_from_cv(beta, cv, beta_cutoff=1.5)
    tail = 0.5 * 0.5 * (2.0 / 1.5)
    assert S[2] == pytest.approx(tail)
    assert S[1] == pytest.approx(tail + 0.25 * (3.0 / 1.0 + 2.0 / 1.5))
    assert S[0] == pytest.approx(S[1] + 0.25 * (4.0 / 0.5 + 3.0 / 1.0))
    assert np.isnan(S[3])
    for bad in (0.2, 1.2, 0.5):
        with pytest.raises(ValueError):
            entropy_from_cv(beta, cv, beta_cutoff=bad)


def test_entropy_handles_beta_zero():
    S = entropy_from_cv(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 1.0]))
    assert np.isfinite(S).all()
    with pytest.raises(ValueError):
        entropy_from_cv(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_free_energy_requires_positive_beta():
    assert free_energy([1.0], [2.0], [0.5]) == pytest.approx([-3.0])
    with pytest.raises(ValueError):
        free_energy([1.0], [2.0], [0.0])


def make(beta, value):
    v = np.full(beta.size, float(value))
    return ThermoCurves(beta=beta, U=v, Cv=v.copy(), S=v.copy(), F=v.copy())


def test_aggregate_mean_and_sample_sd():
    beta = BETA[:3]
    agg = aggregate([make(beta, 1.0), make(beta, 3.0)])
    assert np.allclose(agg.U, 2.0) and np.allclose(agg.U_sd, np.sqrt(2.0))
    single = aggregate([make(beta, 1.0)])
    assert np.all(single.U_sd == 0) and np.all(single.F_sd == 0)
    with pytest.raises(ValueError):
        aggregate([make(beta, 1.0), make(BETA[:4], 1.0)])


def test_error_curves_and_rmse():
    beta = BETA[:4]
    d = error_curves(make(beta, 3.0), make(beta, 1.0))
    assert np.allclose(d.U, 2.0) and rmse(d, "U") == pytest.approx(2.0)
    d.F[0] = np.nan
    assert rmse(d, "F") == pytest.approx(2.0)


def test_curve_file_round_trip(tmp_path):
    c = exact_thermo(solve(HamiltonianSpec(2), vectors=False), np.array([0.0, 0.5, 1.0]))
    path = write_curves(c, tmp_path / "c.csv")
    text = path.read_text().splitlines()
    assert text[0] == ",".join(CURVE_COLUMNS)
    assert text[1].split(",")[7] == "nan"        # F at beta = 0
    back = read_curves(path)
    assert np.allclose(back.U, c.U, rtol=0, atol=0) and np.isnan(back.F[0])


def test_curves_reject_bad_grids():
    with pytest.raises(ValueError):
        canonical_curves(np.array([0.0]), np.zeros(1), np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        canonical_curves(np.array([0.0]), np.zeros(1), np.array([-1.0]))
