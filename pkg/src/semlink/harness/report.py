"""CSV emission with a self-describing header, and matplotlib figures."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .. import __version__  # noqa: E402
from .runners import Table  # noqa: E402

__all__ = ["format_value", "table_to_csv", "write_table", "read_table", "render_figure"]


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def table_to_csv(tab: Table, *, command: str, digest: str, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: semlink {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# scenario_sha256: {digest}\n")
    buf.write(f"# seed: {seed}\n")
    for key in sorted(tab.notes):
        buf.write(f"# {key}: {json.dumps(tab.notes[key], default=float)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(tab.columns)
    for row in tab.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_table(tab: Table, out_dir, *, command: str, digest: str, seed: int) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{tab.name}.csv"
    tmp = path.with_suffix(".csv.tmp")
    tmp.write_text(table_to_csv(tab, command=command, digest=digest, seed=seed))
    os.replace(tmp, path)
    return path


def read_table(path):
    """``(header, columns, rows)`` with numeric cells parsed back to float."""
    header, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            header[k] = v
        else:
            body.append(line)
    rows = list(csv.reader(body))
    cols, data = rows[0], rows[1:]

    def parse(c):
        try:
            return float(c)
        except ValueError:
            return c

    return header, cols, [[parse(c) for c in r] for r in data]


# --------------------------------------------------------------------------- figures


def _records(tab):
    return tab.records()


def _fig_op_curve(tab, ax):
    styles = {"op_quad": "-", "op_accurate": "--", "op_asymptotic": ":"}
    for i, m_f in enumerate(sorted({r["m_f"] for r in _records(tab)})):
        rec = [r for r in _records(tab) if r["m_f"] == m_f]
        x = [r["p_dbw"] for r in rec]
        color = f"C{i}"
        for col, ls in styles.items():
            y = np.array([r[col] for r in rec])
            y = np.where((y > 0) & (y <= 1), y, np.nan)
            ax.semilogy(x, y, ls, color=color, label=f"m_f={m_f:g} {col[3:]}")
        y = np.array([r["op_mc"] for r in rec])
        ax.semilogy(x, np.where(y > 0, y, np.nan), "o", color=color, mfc="none", ms=4,
                    label=f"m_f={m_f:g} mc")
    ax.set_xlabel("transmit power (dBW)")
    ax.set_ylabel("outage probability")
    ax.set_ylim(1e-6, 1.5)
    ax.legend(fontsize=6, ncol=3)


def _fig_alpha_sweep(tab, ax):
    rec = _records(tab)
    for i, p in enumerate(sorted({r["p_total"] for r in rec})):
        pts = sorted((r["alpha"], r["utility"]) for r in rec if r["method"] == "persf" and r["p_total"] == p)
        ax.plot(*zip(*pts), "-o", ms=3, color=f"C{i}", label=f"P={p / 1000:g} kW")
        naive = [r["utility"] for r in rec if r["method"] == "naive" and r["p_total"] == p]
        if naive:
            ax.axhline(naive[0], color=f"C{i}", ls=":", lw=0.8)
    ax.set_xlabel("fusion weight on objective attention")
    ax.set_ylabel("NBS utility")
    ax.legend(fontsize=7, title="dotted: equal split", title_fontsize=7)


def _fig_power_sweep(tab, ax):
    rec = _records(tab)
    users = sorted({r["user"] for r in rec})
    marks = {"persf": "-o", "naive": "--s", "objective": ":^"}
    for u in users:
        color = f"C{int(u) - 1}"
        for method, st in marks.items():
            pts = sorted((r["p_total"], r["score"]) for r in rec if r["method"] == method and r["user"] == u)
            if pts:
                ax.plot(*zip(*pts), st, ms=3, color=color, label=f"user {u:g} {method}")
        ub = [r["upper_bound"] for r in rec if r["user"] == u][0]
        ax.axhline(ub, color=color, ls="-.", lw=0.8)
    ax.set_xlabel("total transmit power (W)")
    ax.set_ylabel("expected match score")
    ax.legend(fontsize=6, ncol=3)


def _fig_alloc_surface(tab, ax):
    rec = _records(tab)
    grid = [r for r in rec if r["kind"] == "grid"]
    if "share_3" not in tab.columns or len(tab.columns) != 5:
        ax.plot([r["share_1"] for r in grid], [r["utility"] for r in grid], ".")
        ax.set_xlabel("share of user 1")
        ax.set_ylabel("NBS utility")
        return
    x = np.array([r["share_1"] for r in grid])
    y = np.array([r["share_2"] for r in grid])
    z = np.array([r["utility"] for r in grid])
    cs = ax.tricontourf(x, y, z, levels=20, cmap="viridis")
    plt.colorbar(cs, ax=ax, label="NBS utility")
    for kind, mark in (("rcga", "r*"), ("equal", "wo")):
        pt = [r for r in rec if r["kind"] == kind]
        if pt:
            ax.plot(pt[0]["share_1"], pt[0]["share_2"], mark, ms=10, mec="k", label=kind)
    ax.set_xlabel("share of user 1")
    ax.set_ylabel("share of user 2")
    ax.legend(fontsize=7)


def _grid_image(tab, ax, xkey, ykey, xlabel, ylabel):
    rec = _records(tab)
    xs = sorted({r[xkey] for r in rec})
    ys = sorted({r[ykey] for r in rec})
    z = np.full((len(ys), len(xs)), np.nan)
    for r in rec:
        z[ys.index(r[ykey]), xs.index(r[xkey])] = r["utility"]
    im = ax.imshow(z, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(xs)), [f"{v:g}" for v in xs])
    ax.set_yticks(range(len(ys)), [f"{v:g}" for v in ys])
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    plt.colorbar(im, ax=ax, label="NBS utility")


def _fig_smallscale(tab, ax):
    _grid_image(tab, ax, "m_f", "m_s", "multipath parameter m_f", "shadowing parameter m_s")


def _fig_largescale(tab, ax):
    _grid_image(tab, ax, "distance", "p_i", "distance (m)", "interference power (W)")


def _fig_comm_cost(tab, ax):
    rec = _records(tab)
    labels = [r["source"] for r in rec]
    x = np.arange(len(rec))
    ax.bar(x - 0.2, [r["vanilla_mb"] for r in rec], 0.4, label="every image to every user")
    ax.bar(x + 0.2, [r["semantic_mb"] for r in rec], 0.4, label="triplets + matched images")
    ax.set_xticks(x, labels)
    ax.set_ylabel("MB transferred")
    ax.legend(fontsize=7)


def _fig_mc_validate(tab, ax):
    rec = _records(tab)
    x = np.arange(len(rec))
    ax.bar(x - 0.2, [r["closed_form"] for r in rec], 0.4, label="closed form")
    ax.bar(x + 0.2, [r["mc_mean"] for r in rec], 0.4, yerr=[3 * r["mc_stderr"] for r in rec],
           label="bit-level simulation (3 s.e.)")
    ax.set_xticks(x, [r["quantity"] for r in rec])
    ax.legend(fontsize=7)


def _fig_allocation(tab, ax):
    rec = _records(tab)
    methods = list(dict.fromkeys(r["method"] for r in rec))
    users = sorted({r["user"] for r in rec})
    width = 0.8 / len(methods)
    for i, m in enumerate(methods):
        ax.bar(np.arange(len(users)) + (i - (len(methods) - 1) / 2) * width,
               [r["share"] for r in rec if r["method"] == m], width, label=m)
    ax.set_xticks(range(len(users)), [f"user {u:g}" for u in users])
    ax.set_ylabel("share of the power budget")
    ax.legend(fontsize=7)


FIGURES = {
    "op_curve": _fig_op_curve,
    "alpha_sweep": _fig_alpha_sweep,
    "power_sweep": _fig_power_sweep,
    "alloc_surface": _fig_alloc_surface,
    "smallscale": _fig_smallscale,
    "largescale": _fig_largescale,
    "comm_cost": _fig_comm_cost,
    "mc_validate": _fig_mc_validate,
    "allocation": _fig_allocation,
}


def render_figure(tab: Table, out_dir) -> Path | None:
    """Render ``<name>.png`` next to the CSV; tables without a figure return ``None``."""
    fn = FIGURES.get(tab.name)
    if fn is None or not tab.rows:
        return None
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    try:
        fn(tab, ax)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = Path(out_dir) / f"{tab.name}.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
    finally:
        plt.close(fig)
    return path
