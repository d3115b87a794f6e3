"""Static SVG figures for the CLI.  Rendering is headless (Agg) and the SVG
output is made reproducible by fixing the id salt and dropping the date."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "svg.hashsalt": "gisc",
    "svg.fonttype": "path",
}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _view_box(values: np.ndarray):
    """Axis limits: the full curve if it is small, else a window around (-1, 0)."""
    re, im = values.real, values.imag
    span = max(np.max(np.abs(re)), np.max(np.abs(im)), 1.0)
    if span <= 5.0:
        lo = min(re.min(), -1.2)
        hi = max(re.max(), 1.2)
        h = max(np.max(np.abs(im)), 1.2)
        pad = 0.05 * (hi - lo)
        return (lo - pad, hi + pad), (-h - pad, h + pad)
    return (-4.0, 2.0), (-3.0, 3.0)


def plot_nyquist(values, path, title: str | None = None) -> None:
    """Nyquist curve with the unit circle and a single critical-point marker."""
    values = np.asarray(values, dtype=complex)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 4.6))
        th = np.linspace(0.0, 2.0 * np.pi, 361)
        ax.plot(np.cos(th), np.sin(th), color="0.6", lw=0.8, ls="--", gid="unit-circle", label="unit circle")
        ax.plot(values.real, values.imag, color="C0", lw=1.1, label="L(jω)")
        ax.plot([-1.0], [0.0], ls="none", marker="+", ms=11, mew=1.8, color="C3",
                gid="critical-point", label="(−1, 0)")
        xl, yl = _view_box(values)
        ax.set_xlim(*xl)
        ax.set_ylim(*yl)
        ax.set_aspect("equal", adjustable="box")
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        _save(fig, path)


def plot_sweep(param: str, values, margins, verdicts, path) -> None:
    """Signed stability margin against a swept parameter; unstable points in red."""
    values = np.asarray(values, dtype=float)
    margins = np.asarray(margins, dtype=float)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.plot(values, margins, color="0.4", lw=0.9)
        colors = ["C2" if v == "stable" else "C3" for v in verdicts]
        ax.scatter(values, margins, c=colors, s=22, zorder=3)
        ax.axhline(0.0, color="k", lw=0.7)
        ax.set_xlabel(param)
        ax.set_ylabel("signed margin")
        fig.tight_layout()
        _save(fig, path)


def plot_trace(time, u_mag, path, events=(), max_points: int = 20000) -> None:
    """PCC voltage magnitude against time, decimated for the figure only."""
    time = np.asarray(time)
    u_mag = np.asarray(u_mag)
    step = max(1, time.size // max_points)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        ax.plot(time[::step], u_mag[::step], color="C0", lw=0.7)
        for t_ev in events:
            ax.axvline(t_ev, color="C3", lw=0.8, ls=":")
        ax.set_xlabel("t (s)")
        ax.set_ylabel("|U| (pu)")
        fig.tight_layout()
        _save(fig, path)
