"""SVG figures for experiment bundles.

Output is byte-stable: the SVG hash salt is fixed and the date metadata is
dropped, so identical data gives identical files.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "wavemap-lab",
    "svg.fonttype": "path",
    "font.size": 8,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "lines.linewidth": 1.0,
    "figure.figsize": (4.8, 3.4),
    "figure.dpi": 100,
}
COLORS = ["#08589e", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#a6761d"]


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def slab_polygon(slab, n=200):
    """Closed (x, y) outline of a region slab."""
    t = np.linspace(float(slab.lo), float(slab.hi), n)

    def ev(b):
        return np.asarray(b(t), dtype=float) if callable(b) else np.full_like(t, float(b))

    lo, up = ev(slab.lower), ev(slab.upper)
    a = np.concatenate([t, t[::-1]])
    b = np.concatenate([lo, up[::-1]])
    return (a, b) if slab.var == "x" else (b, a)


def phase_portrait(path, data):
    """Regions, manifold branches and equilibria in the (x, y) plane."""
    if not data or not data.get("manifolds"):
        warnings.warn("phase portrait: no trajectories, figure skipped")
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, reg in enumerate(data.get("regions", [])):
            for i, (px, py) in enumerate(reg["polygons"]):
                ax.fill(px, py, color=COLORS[(k + 3) % len(COLORS)], alpha=0.25, lw=0.5,
                        label=reg["name"] if i == 0 else None)
        for k, m in enumerate(data["manifolds"]):
            ax.plot(m["x"], m["y"], color=COLORS[k % len(COLORS)], label=m["label"])
        for e in data.get("equilibria", []):
            ax.plot(e["x"], 0.0, "o" if e["kind"] == "saddle" else "s", ms=3, color="k",
                    mfc="w" if e["kind"] == "saddle" else "k")
        ax.axhline(0.0, color="0.6", lw=0.5)
        ax.axvline(0.0, color="0.6", lw=0.5)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        if "xlim" in data:
            ax.set_xlim(*data["xlim"])
        if "ylim" in data:
            ax.set_ylim(*data["ylim"])
        ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def line_plot(path, series, xlabel="", ylabel="", logx=False, logy=False, hlines=()):
    """Several (x, y, label) curves on one axis."""
    series = [s for s in series if s is not None and len(s["x"])]
    if not series:
        warnings.warn(f"{Path(path).name}: no data, figure skipped")
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, s in enumerate(series):
            ax.plot(s["x"], s["y"], color=COLORS[k % len(COLORS)], label=s.get("label"),
                    marker=s.get("marker"), ms=2)
        for y in hlines:
            ax.axhline(y, color="0.5", lw=0.6, ls="--")
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if any(s.get("label") for s in series):
            ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


FIGURES = {
    "phase": lambda d, p: phase_portrait(p, d),
    "renorm": lambda d, p: phase_portrait(p, d),
    "evolve": lambda d, p: line_plot(p, d.get("series", []), "t", "local energy on [1, R]", logy=True),
    "harmonic": lambda d, p: line_plot(p, d.get("series", []), "r", "Q(r)", logx=True,
                                       hlines=d.get("levels", ())),
    "spectral": lambda d, p: line_plot(p, d.get("series", []), "lambda", "Im m / lambda^3",
                                       logx=True, logy=True),
    "coercivity": lambda d, p: line_plot(p, d.get("series", []), "s = log r / log R", "phi"),
}


def emit_figures(bundle, outdir):
    """Render every figure the bundle has data for; returns the written paths."""
    written = []
    for key, draw in FIGURES.items():
        if key not in bundle:
            continue
        path = draw(bundle[key], Path(outdir) / f"{key}.svg")
        if path is not None:
            written.append(path)
    return written
