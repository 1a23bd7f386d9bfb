"""Optional static SVG charts (requires matplotlib)."""
from __future__ import annotations

import io as _io
import math
from pathlib import Path

from .. import io


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("SVG output needs matplotlib (pip install 'lowsysid[plot]')") from exc
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "lowsysid"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    buf = _io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    io.atomic_write(Path(path), buf.getvalue())


def error_vs_time_svg(reports: dict, path):
    """Recovery error against solver wall-clock time, one line per method (log scale)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for m, r in reports.items():
        pts = [(row.wall_clock_s, row.recovery_error) for row in r.trace
               if not math.isnan(row.recovery_error) and row.recovery_error > 0]
        if pts:
            ax.plot(*zip(*pts), label=m)
    ax.set_yscale("log")
    ax.set_xlabel("CPU time (s)")
    ax.set_ylabel("recovery error")
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def sweep_svg(rows, path):
    """Final recovery error against the sweep axis on log-log axes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({r[3] for r in rows if r[0] == "point"})
    axis = next((r[1] for r in rows), "")
    for m in methods:
        pts = [(r[2], r[6]) for r in rows if r[0] == "point" and r[3] == m and r[2] is not None and r[6] > 0]
        if pts:
            ax.plot(*zip(*pts), marker="o", label=m)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("recovery error")
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def spectrum_svg(rows, path, order=None):
    """Last-checkpoint Hankel spectrum per method with the true spectrum; dashed line at the true order."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({r[0] for r in rows})
    for m in methods:
        last = max(r[1] for r in rows if r[0] == m)
        pts = [(r[2], r[3]) for r in rows if r[0] == m and r[1] == last and r[3] > 0]
        ax.plot(*zip(*pts), marker=".", label=m)
    first = rows[0][0]
    true = [(r[2], r[4]) for r in rows if r[0] == first and r[1] == rows[0][1] and r[4] > 0]
    if true:
        ax.plot(*zip(*true), "k:", label="true")
    if order:
        ax.axvline(order, linestyle="--", color="gray")
    ax.set_yscale("log")
    ax.set_xlabel("index")
    ax.set_ylabel("singular value")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
