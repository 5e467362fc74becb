"""Configured multi-run experiments: WL, Metropolis, exact, and their comparison.

Config files use one ``section.key = value`` per line with ``#`` comments.
Unknown keys are errors. Seeds: WL run ``r`` uses ``default_rng(base_seed + r)``;
the Metropolis chain for run ``r`` at grid index ``b`` uses
``default_rng(SeedSequence(base_seed + r, spawn_key=(b,)))``. Chains never
share a stream, so results do not depend on execution order.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import statevector as sv
from .hamiltonian import (
    MAX_SPINS, HamiltonianSpec, Spectrum, energy_window, exact_thermo, solve, write_spectrum,
)
from .metropolis import MetropolisConfig, moments, run_quantum_metropolis
from .metropolis import write_trace as write_metropolis_trace
from .qpe import TIERS, QpeConfig, QpeSampler
from .thermo import (
    QUANTITIES, ThermoCurves, aggregate, entropy_from_cv, error_curves, rmse, thermo_from_dos,
    write_curves,
)
from .wanglandau import BinSpec, WlConfig, default_bins, run_quantum_wl, write_dos

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


# config key -> (attribute, type)
_KEYS = {
    "model.N": ("n_spins", int),
    "model.J": ("coupling", float),
    "model.h": ("field", float),
    "qpe.k": ("k", int),
    "qpe.tier": ("tier", str),
    "wl.bins": ("bins", int),
    "wl.ln_f_init": ("ln_f_init", float),
    "wl.gamma": ("gamma", float),
    "wl.flatness": ("flatness", float),
    "wl.steps_per_check": ("steps_per_check", int),
    "wl.max_rounds": ("max_rounds", int),
    "wl.max_steps": ("max_steps", int),
    "metropolis.burn_in": ("burn_in", int),
    "metropolis.steps_per_chain": ("steps_per_chain", int),
    "metropolis.write_traces": ("write_traces", int),
    "beta.min": ("beta_min", float),
    "beta.max": ("beta_max", float),
    "beta.step": ("beta_step", float),
    "thermo.beta_cutoff": ("beta_cutoff", float),
    "run.runs": ("runs", int),
    "run.base_seed": ("base_seed", int),
    "run.output_dir": ("output_dir", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    n_spins: int = 4
    coupling: float = 2.0
    field: float = 1.0
    k: int = 8
    tier: str = "analytic"
    # 0 selects default_bins(window, k)
    bins: int = 0
    ln_f_init: float = 1.0
    gamma: float = 0.5
    flatness: float = 0.8
    steps_per_check: int = 10_000
    max_rounds: int = 18
    max_steps: int = 100_000_000
    burn_in: int = 5000
    # 0 matches the combined Metropolis budget to the WL step total
    steps_per_chain: int = 0
    write_traces: int = 0
    beta_min: float = 0.05
    beta_max: float = 3.0
    beta_step: float = 0.05
    # 0 means beta_max
    beta_cutoff: float = 0.0
    runs: int = 20
    base_seed: int = 12345
    output_dir: str = "results"

    @property
    def spec(self) -> HamiltonianSpec:
        return HamiltonianSpec(self.n_spins, self.coupling, self.field)

    @property
    def qpe(self) -> QpeConfig:
        return QpeConfig(self.k, energy_window(self.spec), self.tier)

    @property
    def bin_spec(self) -> BinSpec:
        window = energy_window(self.spec)
        return BinSpec(self.bins, window) if self.bins else default_bins(window, self.k)

    @property
    def wl(self) -> WlConfig:
        return WlConfig(self.bin_spec, self.ln_f_init, self.gamma, self.flatness,
                        self.steps_per_check, self.max_rounds, self.max_steps)

    @property
    def beta_grid(self) -> np.ndarray:
        n = int(round((self.beta_max - self.beta_min) / self.beta_step)) + 1
        return np.round(self.beta_min + self.beta_step * np.arange(n), 12)

    @property
    def cutoff(self) -> float:
        return self.beta_cutoff or float(self.beta_grid[-1])

    def validate(self) -> ExperimentConfig:
        errors = []

        def need(cond, key, msg):
            if not cond:
                errors.append(f"{key}: {msg}")

        need(1 <= self.n_spins <= MAX_SPINS, "model.N", f"must be in [1, {MAX_SPINS}]")
        need(math.isfinite(self.coupling), "model.J", "must be finite")
        need(math.isfinite(self.field), "model.h", "must be finite")
        need(self.k >= 1, "qpe.k", "must be >= 1")
        need(self.tier in TIERS, "qpe.tier", f"must be one of {', '.join(TIERS)}")
        if self.tier in TIERS and self.k >= 1 and self.n_spins >= 1:
            qubits = {"pair_statevector": 2 * self.n_spins + self.k,
                      "eigen_statevector": self.n_spins + self.k}.get(self.tier, 0)
            need(qubits <= sv.MAX_QUBITS, "qpe.k",
                 f"tier {self.tier} needs {qubits} qubits, above the {sv.MAX_QUBITS}-qubit guard")
            need(self.n_spins + self.k <= sv.MAX_QUBITS, "qpe.k",
                 f"outcome table of 2^(N + k) = 2^{self.n_spins + self.k} entries "
                 f"exceeds the {sv.MAX_QUBITS}-qubit guard")
        need(self.bins >= 0, "wl.bins", "must be >= 0 (0 = default)")
        need(self.ln_f_init > 0, "wl.ln_f_init", "must be > 0")
        need(0 < self.gamma < 1, "wl.gamma", "must lie in (0, 1)")
        need(0 < self.flatness < 1, "wl.flatness", "must lie in (0, 1)")
        need(self.steps_per_check >= 1, "wl.steps_per_check", "must be >= 1")
        need(self.max_rounds >= 1, "wl.max_rounds", "must be >= 1")
        need(self.max_steps >= 1, "wl.max_steps", "must be >= 1")
        need(self.burn_in >= 0, "metropolis.burn_in", "must be >= 0")
        need(self.steps_per_chain >= 0, "metropolis.steps_per_chain", "must be >= 0 (0 = matched)")
        need(0 <= self.beta_min, "beta.min", "must be >= 0")
        need(self.beta_step > 0, "beta.step", "must be > 0")
        need(self.beta_max >= self.beta_min, "beta.max", "must be >= beta.min")
        need(self.runs >= 1, "run.runs", "must be >= 1")
        if not errors and self.beta_cutoff:
            grid = self.beta_grid
            need(np.any(np.abs(grid - self.beta_cutoff) < 1e-9), "thermo.beta_cutoff",
                 "must be a point of the beta grid")
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
        return self

    def to_text(self) -> str:
        lines = []
        for key, (attr, _) in _KEYS.items():
            lines.append(f"{key} = {getattr(self, attr)}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **kw) -> ExperimentConfig:
        return replace(self, **kw).validate()


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    values = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{source}:{lineno}: expected 'section.key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            errors.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        attr, typ = _KEYS[key]
        try:
            values[attr] = _convert(value, typ)
        except ValueError:
            errors.append(f"{source}:{lineno}: {key} expects {typ.__name__}, got {value!r}")
    if errors:
        raise ConfigError("\n".join(errors))
    return ExperimentConfig(**values).validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def apply_overrides(cfg: ExperimentConfig, pairs) -> ExperimentConfig:
    """``pairs`` of ``"section.key=value"`` strings, as given to ``--set``."""
    if not pairs:
        return cfg
    text = cfg.to_text() + "\n".join(pairs) + "\n"
    return parse_config(text, "--set")


def _convert(value: str, typ):
    if typ is int:
        f = float(value)
        if f != int(f):
            raise ValueError(value)
        return int(f)
    if typ is float:
        return float(value)
    return value


# --- manifests ----------------------------------------------------------------


@dataclass
class RunManifest:
    """Flat key-value record of one experiment stage, rewritten as it progresses."""

    path: Path
    cfg: ExperimentConfig
    stage: str
    seeds: list[int] = field(default_factory=list)
    entries: dict[str, str] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    status: str = "running"

    def add_artifact(self, path: Path):
        name = Path(path).name
        if name not in self.artifacts:
            self.artifacts.append(name)

    def set(self, key: str, value):
        self.entries[key] = str(value)

    def write(self):
        lines = [f"# qwl {self.stage} manifest", f"stage = {self.stage}",
                 f"status = {self.status}", f"code.version = {__version__}"]
        lines += [f"config.{line}" for line in self.cfg.to_text().splitlines()]
        lines.append("seeds = " + ",".join(str(s) for s in self.seeds))
        lines += [f"{k} = {v}" for k, v in self.entries.items()]
        lines += [f"artifact.{i} = {a}" for i, a in enumerate(self.artifacts)]
        self.path.write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line and "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
    return out


# --- experiments --------------------------------------------------------------


@dataclass
class WlResult:
    curves: ThermoCurves
    run_curves: list[ThermoCurves]
    dos: list
    traces: list
    bins: BinSpec
    total_steps: int
    failures: dict[int, str]


@dataclass
class MetropolisResult:
    curves: ThermoCurves
    run_curves: list[ThermoCurves]
    steps_per_chain: int
    total_steps: int
    post_burn_in_steps: int


def _outdir(cfg: ExperimentConfig, out_dir) -> Path:
    d = Path(out_dir if out_dir is not None else cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _spectrum(cfg: ExperimentConfig) -> Spectrum:
    return solve(cfg.spec, vectors=cfg.tier != "analytic")


def run_exact(cfg: ExperimentConfig, out_dir=None) -> ThermoCurves:
    out = _outdir(cfg, out_dir)
    spectrum = _spectrum(cfg)
    curves = exact_thermo(spectrum, cfg.beta_grid)
    man = RunManifest(out / "exact_manifest.cfg", cfg, "exact")
    for name, writer in (("spectrum.txt", lambda p: write_spectrum(spectrum, cfg.spec, p)),
                         ("exact_curves.csv", lambda p: write_curves(curves, p))):
        writer(out / name)
        man.add_artifact(out / name)
    man.status = "complete"
    man.write()
    return curves


def run_wl_experiment(cfg: ExperimentConfig, out_dir=None, sampler=None) -> WlResult:
    out = _outdir(cfg, out_dir)
    spectrum = _spectrum(cfg)
    qpe, wl, bins, beta = cfg.qpe, cfg.wl, cfg.bin_spec, cfg.beta_grid
    man = RunManifest(out / "wl_manifest.cfg", cfg, "wl",
                      seeds=[cfg.base_seed + r for r in range(cfg.runs)])
    man.set("wl.bins_used", bins.ell)
    man.write()
    if sampler is None:
        sampler = QpeSampler(spectrum, qpe)

    run_curves, dos_list, traces, failures = [], [], [], {}
    total = 0
    for r in range(cfg.runs):
        seed = cfg.base_seed + r
        t0 = time.perf_counter()
        try:
            dos, trace = run_quantum_wl(spectrum, qpe, wl, np.random.default_rng(seed), sampler=sampler)
        except Exception as exc:  # keep the other runs
            failures[r] = repr(exc)
            man.set(f"run.{r}.failed", repr(exc).replace("\n", " "))
            man.write()
            log.exception("WL run %d failed", r)
            continue
        path = write_dos(dos, bins, out / f"wl_dos_run{r:02d}.csv")
        man.add_artifact(path)
        run_curves.append(thermo_from_dos(dos.ln_g, dos.visited, bins, beta, spectrum.dim))
        dos_list.append(dos)
        traces.append(trace)
        total += trace.total_steps
        man.set(f"run.{r}.rounds", trace.rounds_completed)
        man.set(f"run.{r}.steps", trace.total_steps)
        man.set(f"run.{r}.seconds", f"{time.perf_counter() - t0:.3f}")
        log.info("WL run %d: %d rounds, %d steps", r, trace.rounds_completed, trace.total_steps)
    if not run_curves:
        man.status = "failed"
        man.write()
        raise RuntimeError(f"all WL runs failed: {failures}")
    curves = aggregate(run_curves)
    man.add_artifact(write_curves(curves, out / "wl_curves.csv"))
    man.set("wl.total_steps", total)
    man.status = "complete" if not failures else "partial"
    man.write()
    return WlResult(curves, run_curves, dos_list, traces, bins, total, failures)


def matched_steps_per_chain(wl_total_steps: int, n_beta: int, runs: int) -> int:
    """Post-burn-in steps per chain so all chains together cover the WL total.

    The combined count overshoots the WL total by fewer than ``n_beta * runs``
    steps.
    """
    return max(1, math.ceil(wl_total_steps / (n_beta * runs)))


def _wl_total_from_manifest(out: Path) -> int | None:
    path = out / "wl_manifest.cfg"
    if not path.exists():
        return None
    m = read_manifest(path)
    return int(m["wl.total_steps"]) if "wl.total_steps" in m else None


def run_metropolis_experiment(cfg: ExperimentConfig, wl_total_steps: int | None = None,
                              out_dir=None, sampler=None) -> MetropolisResult:
    out = _outdir(cfg, out_dir)
    spectrum = _spectrum(cfg)
    beta = cfg.beta_grid
    if cfg.steps_per_chain:
        post = cfg.steps_per_chain
    else:
        if wl_total_steps is None:
            wl_total_steps = _wl_total_from_manifest(out)
        if wl_total_steps is None:
            raise ConfigError(
                "metropolis.steps_per_chain = 0 needs the WL step total: run 'wl' first "
                "into the same output directory or set metropolis.steps_per_chain"
            )
        post = matched_steps_per_chain(wl_total_steps, beta.size, cfg.runs)
    total_steps = post + cfg.burn_in

    man = RunManifest(out / "metropolis_manifest.cfg", cfg, "metropolis",
                      seeds=[cfg.base_seed + r for r in range(cfg.runs)])
    man.set("metropolis.steps_per_chain", total_steps)
    man.set("metropolis.post_burn_in_per_chain", post)
    if wl_total_steps is not None:
        man.set("metropolis.matched_wl_total", wl_total_steps)
    man.write()
    if sampler is None:
        sampler = QpeSampler(spectrum, cfg.qpe)

    run_curves = []
    for r in range(cfg.runs):
        t0 = time.perf_counter()
        U = np.empty(beta.size)
        Cv = np.empty(beta.size)
        for b, bt in enumerate(beta):
            rng = np.random.default_rng(np.random.SeedSequence(cfg.base_seed + r, spawn_key=(b,)))
            trace = run_quantum_metropolis(
                spectrum, cfg.qpe, MetropolisConfig(float(bt), total_steps, cfg.burn_in), rng,
                sampler=sampler,
            )
            U[b], Cv[b] = moments(trace)
            if cfg.write_traces:
                man.add_artifact(write_metropolis_trace(
                    trace, cfg.base_seed + r, out / f"metropolis_trace_run{r:02d}_b{b:03d}.txt"))
        run_curves.append(metropolis_curves(beta, U, Cv, cfg.cutoff))
        man.set(f"run.{r}.seconds", f"{time.perf_counter() - t0:.3f}")
    curves = aggregate(run_curves)
    man.add_artifact(write_curves(curves, out / "metropolis_curves.csv"))
    n_chains = beta.size * cfg.runs
    man.set("metropolis.total_steps", n_chains * total_steps)
    man.set("metropolis.total_post_burn_in", n_chains * post)
    man.status = "complete"
    man.write()
    return MetropolisResult(curves, run_curves, total_steps, n_chains * total_steps, n_chains * post)


def metropolis_curves(beta, U, Cv, cutoff: float) -> ThermoCurves:
    """Entropy by integrating Cv/beta, then ``F = U - S/beta`` where beta > 0.

    A single-point grid has no spacing to integrate over, so S and F stay NaN.
    """
    if beta.size < 2:
        nan = np.full(beta.size, np.nan)
        return ThermoCurves(beta=beta, U=U, Cv=Cv, S=nan, F=nan.copy())
    S = entropy_from_cv(beta, Cv, cutoff)
    F = np.full(beta.size, np.nan)
    pos = beta > 0
    F[pos] = U[pos] - S[pos] / beta[pos]
    return ThermoCurves(beta=beta, U=U, Cv=Cv, S=S, F=F)


@dataclass
class CompareResult:
    exact: ThermoCurves
    wl: WlResult
    metropolis: MetropolisResult
    rmse: dict[str, dict[str, float]]


def run_compare(cfg: ExperimentConfig, out_dir=None) -> CompareResult:
    from .plots import emit_plots

    out = _outdir(cfg, out_dir)
    exact = run_exact(cfg, out)
    spectrum = _spectrum(cfg)
    sampler = QpeSampler(spectrum, cfg.qpe)
    wl = run_wl_experiment(cfg, out, sampler=sampler)
    met = run_metropolis_experiment(cfg, wl.total_steps, out, sampler=sampler)

    man = RunManifest(out / "compare_manifest.cfg", cfg, "compare")
    table = {}
    for name, res in (("wl", wl.curves), ("metropolis", met.curves)):
        diff = error_curves(res, exact)
        man.add_artifact(write_curves(diff, out / f"{name}_error.csv"))
        table[name] = {q: rmse(diff, q) for q in QUANTITIES}
    with open(out / "rmse.csv", "w") as fh:
        fh.write("quantity,wl,metropolis\n")
        for q in QUANTITIES:
            fh.write(f"{q},{table['wl'][q]!r},{table['metropolis'][q]!r}\n")
    man.add_artifact(out / "rmse.csv")
    for p in emit_plots({"Wang-Landau": wl.curves, "Metropolis": met.curves, "exact": exact}, out):
        man.add_artifact(p)
    man.set("wl.total_steps", wl.total_steps)
    man.set("metropolis.total_post_burn_in", met.post_burn_in_steps)
    man.status = "complete"
    man.write()
    return CompareResult(exact, wl, met, table)


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def config_keys() -> list[str]:
    return list(_KEYS)


assert {a for a, _ in _KEYS.values()} == {f.name for f in fields(ExperimentConfig)}
