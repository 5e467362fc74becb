"""Hand-written SVG line charts of thermodynamic curves.

Every chart uses an 800x600 viewBox. The plot area spans x in [80, 770] and
y in [60, 530]; beta maps linearly from the grid range onto x, and values map
linearly (larger values upward) from the data range padded by 5% onto y.
Error bars are one standard deviation. Points that are NaN break the line.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .thermo import ThermoCurves, error_curves

WIDTH, HEIGHT = 800, 600
X0, X1, Y0, Y1 = 80.0, 770.0, 60.0, 530.0
COLORS = {"Wang-Landau": "#1f77b4", "Metropolis": "#d62728", "exact": "#000000"}
_FALLBACK = ("#2ca02c", "#9467bd", "#8c564b", "#ff7f0e")

TITLES = {
    "U": "Energy vs. inverse temperature",
    "Cv": "Heat capacity vs. inverse temperature",
    "F": "Free energy vs. inverse temperature",
    "S": "Entropy vs. inverse temperature",
}
LABELS = {"U": "U", "Cv": "C_v", "F": "F", "S": "S"}


def emit_plots(curve_sets: dict[str, ThermoCurves], output_dir, exact_key: str = "exact"
               ) -> list[Path]:
    """Four main charts plus one error chart (method minus exact) per quantity.

    Empty or missing entries in ``curve_sets`` are skipped. Error charts are
    only drawn when ``exact_key`` is present.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sets = {k: v for k, v in curve_sets.items() if v is not None and len(v) > 0}
    if not sets:
        raise ValueError("no curves to plot")
    paths = []
    for q in ("U", "Cv", "F", "S"):
        series = [(name, c.beta, getattr(c, q), getattr(c, q + "_sd")) for name, c in sets.items()]
        path = out / f"fig_{q}.svg"
        path.write_text(line_chart(series, TITLES[q], "beta", LABELS[q]))
        paths.append(path)
        if exact_key in sets:
            exact = sets[exact_key]
            diffs = []
            for name, c in sets.items():
                if name == exact_key:
                    continue
                d = error_curves(c, exact)
                diffs.append((name, d.beta, getattr(d, q), getattr(d, q + "_sd")))
            if diffs:
                path = out / f"fig_{q}_error.svg"
                path.write_text(line_chart(diffs, f"{TITLES[q]}: error vs. exact",
                                           "beta", f"{LABELS[q]} - exact", zero_line=True))
                paths.append(path)
    return paths


def line_chart(series, title: str, xlabel: str, ylabel: str, zero_line: bool = False) -> str:
    """``series`` is a list of ``(name, x, y, yerr)``; returns the SVG document."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    lo_hi = []
    for _, _, y, e in series:
        y, e = np.asarray(y, float), np.asarray(e, float)
        ok = np.isfinite(y)
        err = np.where(np.isfinite(e), e, 0.0)
        lo_hi.append(np.concatenate([(y - err)[ok], (y + err)[ok]]))
    ys = np.concatenate(lo_hi + ([np.zeros(1)] if zero_line else []))
    xlo, xhi = _range(xs[np.isfinite(xs)])
    ylo, yhi = _range(ys, pad=0.05)

    def px(x):
        return X0 + (x - xlo) / (xhi - xlo) * (X1 - X0)

    def py(y):
        return Y1 - (y - ylo) / (yhi - ylo) * (Y1 - Y0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<rect x="{X0}" y="{Y0}" width="{X1 - X0}" height="{Y1 - Y0}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(xlo, xhi):
        x = px(t)
        parts.append(f'<line x1="{x:.2f}" y1="{Y1}" x2="{x:.2f}" y2="{Y1 + 5}" stroke="#444"/>')
        parts.append(f'<text x="{x:.2f}" y="{Y1 + 20}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(ylo, yhi):
        y = py(t)
        parts.append(f'<line x1="{X0 - 5}" y1="{y:.2f}" x2="{X0}" y2="{y:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{X0 - 8}" y="{y + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    parts.append(f'<text x="{(X0 + X1) / 2}" y="{HEIGHT - 20}" text-anchor="middle">'
                 f'{escape(xlabel)}</text>')
    parts.append(f'<text x="20" y="{(Y0 + Y1) / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {(Y0 + Y1) / 2})">{escape(ylabel)}</text>')
    if zero_line and ylo < 0 < yhi:
        parts.append(f'<line x1="{X0}" y1="{py(0):.2f}" x2="{X1}" y2="{py(0):.2f}" '
                     f'stroke="#999" stroke-dasharray="4 4"/>')

    legend = []
    for i, (name, x, y, err) in enumerate(series):
        color = COLORS.get(name, _FALLBACK[i % len(_FALLBACK)])
        x, y, err = (np.asarray(a, float) for a in (x, y, err))
        for seg in _segments(np.isfinite(y)):
            pts = " ".join(f"{px(x[j]):.2f},{py(y[j]):.2f}" for j in seg)
            parts.append(f'<polyline class="series" data-name="{escape(name)}" points="{pts}" '
                         f'fill="none" stroke="{color}" stroke-width="1.8"/>')
        for j in np.nonzero(np.isfinite(y) & np.isfinite(err) & (err > 0))[0]:
            parts.append(f'<line class="errorbar" x1="{px(x[j]):.2f}" y1="{py(y[j] - err[j]):.2f}" '
                         f'x2="{px(x[j]):.2f}" y2="{py(y[j] + err[j]):.2f}" stroke="{color}"/>')
        ly = Y0 + 20 + 20 * i
        legend.append(f'<line x1="{X1 - 150}" y1="{ly}" x2="{X1 - 120}" y2="{ly}" '
                      f'stroke="{color}" stroke-width="2"/>')
        legend.append(f'<text x="{X1 - 112}" y="{ly + 4}">{escape(name)}</text>')
    parts.append(f'<rect x="{X1 - 160}" y="{Y0 + 6}" width="154" height="{20 * len(series) + 8}" '
                 f'fill="white" fill-opacity="0.85" stroke="#ccc"/>')
    parts += legend
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _range(v, pad: float = 0.0) -> tuple[float, float]:
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _ticks(lo: float, hi: float, n: int = 6) -> np.ndarray:
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    t = np.arange(start, hi + 1e-9 * step, step)
    return np.where(np.abs(t) < 1e-12 * step, 0.0, t)


def _segments(mask):
    seg = []
    for j, ok in enumerate(mask):
        if ok:
            seg.append(j)
        elif seg:
            yield seg
            seg = []
    if seg:
        yield seg
