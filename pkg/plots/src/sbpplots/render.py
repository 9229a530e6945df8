"""
Figure generation from solver CSV outputs.

The solver emits a small family of CSV schemas (convergence tables,
energy traces, field snapshots, slowness-surface polylines and receiver
traces); this module turns them into figures.  It never recomputes any
physics: every figure is a pure function of the CSV content.

    job = PlotJob(kind="convergence", inputs=["convergence.csv"],
                  output="convergence.png")
    render(job)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (after backend selection)

KINDS = ("convergence", "energy", "snapshot", "slowness", "gather")

REQUIRED_COLUMNS = {
    "convergence": ("h_inv", "ppwl", "order", "stencil", "log10_error",
                    "rate"),
    "energy": ("t", "kinetic", "strain", "remainder", "correction", "total"),
    "snapshot": ("i", "j", "X1", "X2", "u1", "u2"),
    "slowness": ("branch", "angle", "s1", "s2"),
    "gather": ("t", "u1", "u2", "v1", "v2"),
}

# reference slopes overlaid on the convergence figure
GUIDE_SLOPES = (2.0, 3.5, 4.5)


class SchemaError(ValueError):
    """Input CSV does not match the expected column contract."""


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("no input CSV files given")
        object.__setattr__(self, "inputs", tuple(self.inputs))


def read_table(path, kind):
    """Rows of `path` as a dict of float columns, schema-checked."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing} "
                              f"for kind {kind!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    table = {}
    for c in REQUIRED_COLUMNS[kind]:
        values = [r[c] for r in rows]
        try:
            table[c] = np.array([float(v) for v in values])
        except ValueError:  # non-numeric column (e.g. stencil names)
            table[c] = np.array(values)
    return table


def _plot_convergence(ax, tables):
    for table in tables:
        series = sorted({(o, s) for o, s in
                         zip(table["order"].astype(int),
                             _stencils(table))})
        for order, stencil in series:
            mask = (table["order"].astype(int) == order) \
                & (_stencils(table) == stencil)
            h_inv = table["h_inv"][mask]
            err = 10.0 ** table["log10_error"][mask]
            label = f"order {order}" + ("" if stencil == "narrow"
                                        else f" ({stencil})")
            ax.loglog(h_inv, err, "o-", label=label)
    # anchored reference slopes
    h0, h1 = ax.get_xlim()
    href = np.array([h0, h1])
    y0 = ax.get_ylim()[1]
    for slope in GUIDE_SLOPES:
        ax.loglog(href, y0 * (href / href[0]) ** (-slope), "k--",
                  linewidth=0.7, label=f"slope {slope:g}")
    ax.set_xlabel("1 / h")
    ax.set_ylabel("l2 error")
    ax.legend(fontsize=8)


def _stencils(table):
    return np.asarray(table["stencil"], dtype=str)


def _plot_energy(ax, tables):
    for table in tables:
        for part in ("kinetic", "strain", "remainder", "correction",
                     "total"):
            ax.plot(table["t"], table[part], label=part)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)


def _plot_snapshot(ax, tables):
    vmax = max(float(np.abs(np.hypot(t["u1"], t["u2"])).max())
               for t in tables)
    mesh = None
    for table in tables:
        ni = int(table["i"].max()) + 1
        nj = int(table["j"].max()) + 1
        if len(table["i"]) != ni * nj:
            raise SchemaError("snapshot rows do not fill an (i, j) grid")
        order = np.lexsort((table["j"], table["i"]))
        shape = (ni, nj)
        X1 = table["X1"][order].reshape(shape)
        X2 = table["X2"][order].reshape(shape)
        mag = np.hypot(table["u1"], table["u2"])[order].reshape(shape)
        mesh = ax.pcolormesh(X1, X2, mag, shading="gouraud",
                             vmin=0.0, vmax=vmax or 1.0)
    plt.colorbar(mesh, ax=ax, label="|u|")
    ax.set_aspect("equal")
    ax.set_xlabel("X1")
    ax.set_ylabel("X2")


def _plot_slowness(ax, tables):
    for table in tables:
        for branch in sorted(set(table["branch"].astype(int))):
            mask = table["branch"].astype(int) == branch
            ax.plot(table["s1"][mask], table["s2"][mask],
                    label=f"branch {branch}")
    ax.set_aspect("equal")
    ax.set_xlabel("s1")
    ax.set_ylabel("s2")
    ax.legend(fontsize=8)


def _plot_gather(ax, tables):
    # one offset trace per input file, shot-gather style
    scale = max(float(np.abs(t["u2"]).max()) for t in tables) or 1.0
    for k, table in enumerate(tables):
        ax.plot(table["t"], k + table["u2"] / (2.0 * scale), "k-",
                linewidth=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("trace index")
    ax.set_yticks(range(len(tables)))


_RENDERERS = {
    "convergence": _plot_convergence,
    "energy": _plot_energy,
    "snapshot": _plot_snapshot,
    "slowness": _plot_slowness,
    "gather": _plot_gather,
}


def render(job):
    """Render `job` and return the output path."""
    tables = [read_table(path, job.kind) for path in job.inputs]
    fig, ax = plt.subplots(figsize=(6.0, 4.5), constrained_layout=True)
    try:
        _RENDERERS[job.kind](ax, tables)
        fig.savefig(job.output, dpi=150)
    finally:
        plt.close(fig)
    return job.output
