"""Static, byte-reproducible SVG figures: box plots, histograms, trajectories.

Figures are 800 x 500 px. Rendering uses a fixed hash salt and no date
metadata, so re-running a plot yields an identical file.
"""
from __future__ import annotations

import io
from collections import OrderedDict
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .exceptions import ParameterError
from .experiments import summarize_errors

WIDTH_PX, HEIGHT_PX = 800, 500
_PT_PER_INCH = 72.0
_RC = {"svg.hashsalt": "fjmask", "svg.fonttype": "none", "font.family": "DejaVu Sans"}


def _figure() -> Figure:
    return Figure(figsize=(WIDTH_PX / _PT_PER_INCH, HEIGHT_PX / _PT_PER_INCH), dpi=_PT_PER_INCH)


def _render(fig: Figure, out) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def _group(rows) -> "OrderedDict[float, list[float]]":
    groups: OrderedDict[float, list[float]] = OrderedDict()
    for value, _, err in rows:
        groups.setdefault(value, []).append(err)
    return groups


def box_plot_svg(rows, out=None, *, xlabel: str = "swept value", log_y: bool = True) -> str:
    """One box per swept value from ``(swept_value, trial, estimate_error)`` rows.

    Boxes span the linear-interpolation quartiles used by the sweep summary;
    whiskers run to the finite min and max. Infinite and excluded trials
    are left out.
    """
    groups = _group(rows)
    if not groups:
        raise ParameterError("no data to plot")
    stats, labels = [], []
    for value, errs in groups.items():
        s = summarize_errors(errs)
        if s["finite"] == 0:
            continue
        stats.append({
            "med": s["median"], "q1": s["q1"], "q3": s["q3"],
            "whislo": s["min"], "whishi": s["max"], "fliers": [], "label": f"{value:g}",
        })
        labels.append(value)
    if not stats:
        raise ParameterError("no finite estimate errors to plot")
    with matplotlib.rc_context(_RC):
        fig = _figure()
        ax = fig.add_subplot()
        ax.bxp(stats, showfliers=False)
        if log_y:
            ax.set_yscale("log")
        ax.axhline(1.0, color="grey", linestyle="--", linewidth=0.8)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("estimate error")
        fig.tight_layout()
    return _render(fig, out)


def histogram_svg(errors, out=None, *, bins: int = 50, log_x: bool = True) -> str:
    """Histogram of the finite estimate errors."""
    e = np.asarray(errors, dtype=float)
    e = e[np.isfinite(e)]
    if e.size == 0:
        raise ParameterError("no finite estimate errors to plot")
    with matplotlib.rc_context(_RC):
        fig = _figure()
        ax = fig.add_subplot()
        if log_x and np.all(e > 0):
            edges = np.logspace(np.log10(e.min()), np.log10(e.max()), bins + 1) if e.min() < e.max() else bins
            ax.hist(e, bins=edges, color="steelblue", edgecolor="white", linewidth=0.3)
            ax.set_xscale("log")
        else:
            ax.hist(e, bins=bins, color="steelblue", edgecolor="white", linewidth=0.3)
        ax.axvline(1.0, color="grey", linestyle="--", linewidth=0.8)
        ax.set_xlabel("estimate error")
        ax.set_ylabel("count")
        fig.tight_layout()
    return _render(fig, out)


def trajectory_svg(panels, out=None, *, titles=None) -> str:
    """Opinion trajectories, one panel per ``(T + 1, n)`` state array, stacked vertically."""
    panels = [np.atleast_2d(np.asarray(p, dtype=float)) for p in panels]
    if not panels or any(p.size == 0 for p in panels):
        raise ParameterError("no trajectory to plot")
    titles = list(titles) if titles is not None else [None] * len(panels)
    with matplotlib.rc_context(_RC):
        fig = _figure()
        axes = fig.subplots(len(panels), 1, sharex=True, squeeze=False)[:, 0]
        for ax, states, title in zip(axes, panels, titles):
            ax.plot(np.arange(states.shape[0]), states, linewidth=0.8)
            ax.set_ylabel("opinion")
            if title:
                ax.set_title(title, fontsize=10)
        axes[-1].set_xlabel("timestep")
        fig.tight_layout()
    return _render(fig, out)
