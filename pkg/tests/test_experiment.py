import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qwl.cli import main
from qwl.experiment import (
    ConfigError, ExperimentConfig, apply_overrides, config_keys, load_config,
    matched_steps_per_chain, parse_config, read_manifest, run_compare, run_exact,
    run_metropolis_experiment, run_wl_experiment,
)
from qwl.plots import emit_plots
from qwl.thermo import ThermoCurves, read_curves

SMALL = """
model.N = 2
qpe.k = 6
wl.steps_per_check = 2000
wl.max_rounds = 8
beta.min = 0.25
beta.max = 1.0
beta.step = 0.25
run.runs = 2
"""


@pytest.fixture
def small(tmp_path):
    return parse_config(SMALL + f"run.output_dir = {tmp_path}\n")


# --- config -------------------------------------------------------------------

def test_minimal_config_gets_documented_defaults(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("model.N = 4\nmodel.J = 2\nmodel.h = 1\nqpe.k = 8  # phase qubits\n")
    cfg = load_config(path)
    assert cfg == ExperimentConfig(n_spins=4, coupling=2.0, field=1.0, k=8)
    assert cfg.tier == "analytic" and cfg.runs == 20 and cfg.burn_in == 5000
    assert cfg.bin_spec.ell == 63 and cfg.cutoff == 3.0
    assert cfg.beta_grid.size == 60 and cfg.beta_grid[0] == 0.05 and cfg.beta_grid[-1] == 3.0


def test_paper_configuration_is_accepted():
    cfg = parse_config("model.N = 9\nqpe.k = 11\nqpe.tier = eigen_statevector\n")
    assert cfg.qpe.qubits_needed(9) == 20


def test_pair_tier_guard_is_named():
    with pytest.raises(ConfigError, match="26-qubit guard"):
        parse_config("model.N = 8\nqpe.k = 11\nqpe.tier = pair_statevector\n")


@pytest.mark.parametrize("text,msg", [
    ("model.spins = 3\n", "unknown key 'model.spins'"),
    ("model.N = three\n", "model.N expects int"),
    ("model.N 3\n", "expected 'section.key = value'"),
    ("model.N = 14\n", r"model.N: must be in \[1, 13\]"),
    ("wl.gamma = 1.5\n", "wl.gamma"),
    ("qpe.tier = magic\n", "qpe.tier"),
    ("thermo.beta_cutoff = 1.234\n", "thermo.beta_cutoff"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_config_text_round_trips():
    cfg = ExperimentConfig(n_spins=3, k=5, tier="eigen_statevector", runs=4)
    assert parse_config(cfg.to_text()) == cfg
    assert [line.split(" = ")[0] for line in cfg.to_text().splitlines()] == config_keys()
    assert apply_overrides(cfg, ["run.runs = 7"]).runs == 7


def test_shipped_configs_load():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "configs"
    desk = load_config(root / "paper_desk.cfg")
    assert (desk.n_spins, desk.k, desk.tier) == (4, 8, "analytic")
    scale = load_config(root / "paper_scale.cfg")
    assert (scale.n_spins, scale.k, scale.tier) == (9, 11, "eigen_statevector")


# --- budget rule --------------------------------------------------------------------

@pytest.mark.parametrize("wl_total,n_beta,runs", [(223_760_000, 60, 20), (10_000_001, 7, 3), (5, 60, 20)])
def test_budget_matching(wl_total, n_beta, runs):
    post = matched_steps_per_chain(wl_total, n_beta, runs)
    total = post * n_beta * runs
    assert total >= wl_total
    assert total - wl_total < n_beta * runs


# --- experiments ------------------------------------------------------------------------

def test_wl_experiment_writes_curves_and_manifest(small, tmp_path):
    res = run_wl_experiment(small)
    assert len(res.run_curves) == 2 and not res.failures
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["wl_curves.csv", "wl_dos_run00.csv", "wl_dos_run01.csv", "wl_manifest.cfg"]
    man = read_manifest(tmp_path / "wl_manifest.cfg")
    assert man["status"] == "complete" and man["seeds"] == "12345,12346"
    assert int(man["wl.total_steps"]) == res.total_steps
    assert man["run.0.rounds"] == "8" and "run.1.seconds" in man and "code.version" in man
    assert man["config.model.N"] == "2"
    curves = read_curves(tmp_path / "wl_curves.csv")
    assert np.allclose(curves.U, res.curves.U)


def test_single_run_has_zero_spread(small, tmp_path):
    res = run_wl_experiment(small.with_overrides(runs=1))
    assert np.all(res.curves.U_sd == 0) and np.all(res.curves.S_sd == 0)


def test_reruns_are_byte_identical(small, tmp_path):
    run_wl_experiment(small, tmp_path / "a")
    run_wl_experiment(small, tmp_path / "b")
    for name in ("wl_curves.csv", "wl_dos_run00.csv", "wl_dos_run01.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    other = run_wl_experiment(small.with_overrides(base_seed=999), tmp_path / "c")
    assert (tmp_path / "c" / "wl_dos_run00.csv").read_bytes() != (tmp_path / "a" / "wl_dos_run00.csv").read_bytes()
    assert other.total_steps > 0


def test_failed_run_is_recorded(small, tmp_path, monkeypatch):
    import qwl.experiment as ex

    real = ex.run_quantum_wl
    calls = []

    def flaky(*a, **kw):
        calls.append(1)
        if len(calls) == 1:
            raise RuntimeError("boom")
        return real(*a, **kw)

    monkeypatch.setattr(ex, "run_quantum_wl", flaky)
    res = run_wl_experiment(small)
    assert list(res.failures) == [0] and len(res.run_curves) == 1
    man = read_manifest(tmp_path / "wl_manifest.cfg")
    assert man["status"] == "partial" and "boom" in man["run.0.failed"]


def test_metropolis_needs_a_budget(small):
    with pytest.raises(ConfigError, match="run 'wl' first"):
        run_metropolis_experiment(small)


def test_metropolis_reads_wl_total_from_manifest(small, tmp_path):
    wl = run_wl_experiment(small)
    met = run_metropolis_experiment(small.with_overrides(burn_in=100))
    assert met.post_burn_in_steps >= wl.total_steps
    assert met.post_burn_in_steps - wl.total_steps < 4 * 2
    assert met.total_steps == met.post_burn_in_steps + 4 * 2 * 100
    man = read_manifest(tmp_path / "metropolis_manifest.cfg")
    assert int(man["metropolis.matched_wl_total"]) == wl.total_steps


def test_metropolis_single_point_grid(tmp_path):
    cfg = parse_config(f"model.N = 2\nqpe.k = 6\nbeta.min = 1\nbeta.max = 1\nrun.runs = 1\n"
                       f"metropolis.steps_per_chain = 20000\nmetropolis.burn_in = 1000\n"
                       f"run.output_dir = {tmp_path}\n")
    res = run_metropolis_experiment(cfg)
    assert res.curves.U.size == 1 and np.isfinite(res.curves.U[0]) and np.isfinite(res.curves.Cv[0])
    assert np.isnan(res.curves.S[0])


def test_metropolis_traces_are_listed(tmp_path):
    cfg = parse_config(f"model.N = 1\nqpe.k = 4\nbeta.min = 1\nbeta.max = 2\nbeta.step = 1\n"
                       f"run.runs = 1\nmetropolis.steps_per_chain = 50\nmetropolis.burn_in = 10\n"
                       f"metropolis.write_traces = 1\nrun.output_dir = {tmp_path}\n")
    run_metropolis_experiment(cfg)
    man = read_manifest(tmp_path / "metropolis_manifest.cfg")
    listed = {v for k, v in man.items() if k.startswith("artifact.")}
    assert listed == {"metropolis_curves.csv", "metropolis_trace_run00_b000.txt",
                      "metropolis_trace_run00_b001.txt"}


def test_compare_lists_every_artifact(small, tmp_path):
    res = run_compare(small)
    assert set(res.rmse) == {"wl", "metropolis"}
    listed = set()
    manifests = {p.name for p in tmp_path.glob("*_manifest.cfg")}
    for m in manifests:
        listed |= {v for k, v in read_manifest(tmp_path / m).items() if k.startswith("artifact.")}
    on_disk = {p.name for p in tmp_path.iterdir()}
    assert on_disk == listed | manifests
    assert {f"fig_{q}.svg" for q in ("U", "Cv", "F", "S")} <= on_disk
    assert (tmp_path / "rmse.csv").read_text().startswith("quantity,wl,metropolis\n")


def test_exact_stage(tmp_path):
    cfg = parse_config(f"model.N = 1\nrun.output_dir = {tmp_path}\n")
    curves = run_exact(cfg)
    assert (tmp_path / "spectrum.txt").read_text() == "# 1 2.0 1.0\n1\n3\n"
    assert np.isfinite(curves.U).all()


# --- plots --------------------------------------------------------------------------

def curves(beta, f, sd=0.0):
    v = f(beta)
    s = np.full(beta.size, sd)
    return ThermoCurves(beta=beta, U=v, Cv=v + 1, S=v + 2, F=v + 3, U_sd=s, Cv_sd=s, S_sd=s, F_sd=s)


def series_names(svg_path):
    root = ET.parse(svg_path).getroot()
    ns = "{http://www.w3.org/2000/svg}"
    assert root.get("viewBox") == "0 0 800 600"
    return {p.get("data-name") for p in root.iter(ns + "polyline")}, root


def test_plots_structure(tmp_path):
    beta = np.linspace(0.1, 3, 30)
    paths = emit_plots({"Wang-Landau": curves(beta, np.sin, 0.1), "Metropolis": curves(beta, np.cos),
                        "exact": curves(beta, np.sin)}, tmp_path)
    assert sorted(p.name for p in paths) == sorted(
        [f"fig_{q}.svg" for q in ("U", "Cv", "F", "S")] + [f"fig_{q}_error.svg" for q in ("U", "Cv", "F", "S")])
    names, root = series_names(tmp_path / "fig_U.svg")
    assert names == {"Wang-Landau", "Metropolis", "exact"}
    bars = [e for e in root.iter("{http://www.w3.org/2000/svg}line") if e.get("class") == "errorbar"]
    assert len(bars) == 30        # only the WL series has a spread
    names, _ = series_names(tmp_path / "fig_U_error.svg")
    assert names == {"Wang-Landau", "Metropolis"}


def test_plots_without_metropolis(tmp_path):
    beta = np.linspace(0.1, 3, 10)
    emit_plots({"Wang-Landau": curves(beta, np.sin), "Metropolis": None, "exact": curves(beta, np.cos)},
               tmp_path)
    names, _ = series_names(tmp_path / "fig_S.svg")
    assert names == {"Wang-Landau", "exact"}


def test_identical_series_give_flat_error_panel(tmp_path):
    beta = np.linspace(0.1, 3, 10)
    emit_plots({"Wang-Landau": curves(beta, np.sin), "exact": curves(beta, np.sin)}, tmp_path)
    root = ET.parse(tmp_path / "fig_F_error.svg").getroot()
    line = next(p for p in root.iter("{http://www.w3.org/2000/svg}polyline"))
    ys = {pt.split(",")[1] for pt in line.get("points").split()}
    assert len(ys) == 1


def test_nan_points_break_the_line(tmp_path):
    beta = np.linspace(0.1, 3, 10)
    c = curves(beta, np.sin)
    c.F[4] = np.nan
    emit_plots({"exact": c}, tmp_path)
    root = ET.parse(tmp_path / "fig_F.svg").getroot()
    assert len(list(root.iter("{http://www.w3.org/2000/svg}polyline"))) == 2


# --- cli --------------------------------------------------------------------------------

def test_cli_usage_errors(capsys):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["wl", "--frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_cli_exact_prints_fixture_format(tmp_path, capsys):
    assert main(["exact", "--set", "model.N=1", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out == "# 1 2.0 1.0\n1\n3\n"


def test_cli_config_validation_failure(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("model.N = 8\nqpe.k = 12\n")
    assert main(["wl", "--config", str(path), "--tier", "pair_statevector"]) == 1
    assert "guard" in capsys.readouterr().err


def test_cli_flags_override_config(tmp_path, capsys):
    path = tmp_path / "c.cfg"
    path.write_text(SMALL)
    out = tmp_path / "out"
    assert main(["wl", "--config", str(path), "--out", str(out), "--runs", "1", "--seed", "5",
                 "--tier", "eigen_statevector", "--set", "wl.max_rounds=2"]) == 0
    man = read_manifest(out / "wl_manifest.cfg")
    assert man["seeds"] == "5" and man["config.qpe.tier"] == "eigen_statevector"
    assert man["run.0.rounds"] == "2"
    assert main(["metropolis", "--config", str(path), "--out", str(out), "--runs", "1",
                 "--set", "metropolis.burn_in=100"]) == 0
    assert re.search(r"post-burn-in", capsys.readouterr().out)


def test_cli_validate_battery_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 8 and all(line.startswith("PASS") for line in out)
