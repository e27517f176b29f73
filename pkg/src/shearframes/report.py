"""Figures for the command-line reports.

Every figure is written as SVG with a 1000 x 700 viewBox.  The output is
byte-stable: the SVG id salt is fixed and no creation date is embedded.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# matplotlib writes SVG sizes in points (72 per inch)
FIGSIZE = (1000 / 72, 700 / 72)
STYLE = {
    "svg.hashsalt": "shearframes",
    "svg.fonttype": "path",
    "font.size": 14,
    "axes.titlesize": 15,
    "axes.labelsize": 14,
    "legend.fontsize": 12,
    "lines.linewidth": 1.6,
    "lines.markersize": 5,
}
COLORS = {"fourier": "#1b6ca8", "haar": "#d1495b", "shearlet": "#2e8b57"}
REF_STYLE = dict(color="0.45", linestyle="--", linewidth=1.0)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def _color(name: str) -> str:
    for key, col in COLORS.items():
        if name.startswith(key):
            return col
    return "black"


def error_curves_svg(curves: dict, fits: dict, d: int, path, title: str = "") -> Path:
    """Log-log err^2 against N per system, with reference slopes -1/d, -1/(d-1), -2/(d-1).

    ``curves`` maps system name to an ErrorCurve, ``fits`` to a DecayFit.
    Reference lines are anchored at the first point of the first curve.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        anchor = None
        for name, curve in curves.items():
            N = np.asarray(curve.N, float)
            err = np.asarray(curve.err_sq, float)
            ok = (N > 0) & (err > 0)
            label = name
            if name in fits:
                label = f"{name} (slope {fits[name].slope:.2f})"
            ax.loglog(N[ok], err[ok], "o-", color=_color(name), label=label)
            if anchor is None and ok.any():
                anchor = (N[ok][0], err[ok][0])
        if anchor is not None:
            lo = min(np.asarray(c.N, float)[np.asarray(c.N) > 0].min() for c in curves.values())
            hi = max(max(c.N) for c in curves.values())
            xs = np.array([lo, hi], float)
            refs = [(-1.0 / d, f"-1/{d}")]
            if d > 1:
                refs += [(-1.0 / (d - 1), f"-1/{d - 1}" if d > 2 else "-1"),
                         (-2.0 / (d - 1), f"-2/{d - 1}" if d > 2 else "-2")]
            for k, (s, lab) in enumerate(refs):
                ys = anchor[1] * (xs / anchor[0]) ** s
                ax.loglog(xs, ys, dashes=[6, 2 + 2 * k], label=f"reference {lab}",
                          **{k2: v for k2, v in REF_STYLE.items() if k2 != "linestyle"})
        ax.set_xlabel("N")
        ax.set_ylabel(r"$\|f - f_N\|^2$")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower left")
        ax.grid(True, which="major", alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)


def decay_svg(rows: list[dict], fits: dict, path, title: str = "") -> Path:
    """max |<f, psi>| against j, one marker per shear, log2 scale."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        js = np.array([r["j"] for r in rows], float)
        mx = np.array([r["max_coeff"] for r in rows], float)
        ok = mx > 0
        ax.semilogy(js[ok], mx[ok], "o", color="0.35", alpha=0.6, label="all shears", base=2)
        fit = fits.get("j_slope")
        if fit is not None:
            xs = np.linspace(js.min(), js.max(), 2)
            ax.semilogy(xs, 2.0 ** (fit.intercept + fit.slope * xs), color=COLORS["shearlet"],
                        label=f"fit near khat = 0, slope {fit.slope:.2f}", base=2)
        ax.set_xlabel("scale j")
        ax.set_ylabel("max coefficient modulus")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower left")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        return _save(fig, path)
