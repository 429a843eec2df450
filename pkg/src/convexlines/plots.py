"""Figure rendering for verification reports.

One PNG per check family, built from the report rows alone (plus, for the
metric check, a deterministic replay of the pair stream so the scatter shows
the raw distances the summary row aggregated).  Uses the Agg backend so the
report path works headless.
"""
from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import hausdorff_distance, tangential_distance
from .verify import Report, ReportRow, random_convex_polyline
from .sampler import RngStream

# scatter size kept well below the check's pair budget: the figure is an
# illustration, the margin row upstream is the actual test
SCATTER_PAIRS = 400


def _size(row: ReportRow) -> float:
    return math.sqrt(row.n1 * row.n2)


def _series(rows: list[ReportRow], statistic: str):
    """(x, y) arrays for one statistic, grouped by the r column."""
    groups: dict[float, list[ReportRow]] = defaultdict(list)
    for row in rows:
        if row.statistic == statistic:
            groups[row.r].append(row)
    out = {}
    for r, grp in groups.items():
        grp = sorted(grp, key=_size)
        out[r] = (np.array([_size(g) for g in grp]), np.array([g.value for g in grp]))
    return out


def _calibration_figure(rows, config):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for ax, kind, title in (
        (axes[0], "ratio", "endpoint ratio error |E xi_j / n_j - 1|"),
        (axes[1], "refined", "refined error (E xi_j - n_j) / n_j^(2/3)"),
    ):
        for j in (1, 2):
            stat = f"xi{j}_{kind}"
            for r, grp in sorted(_series(rows, stat).items()):
                x, y = grp
                if kind == "ratio":
                    y = np.abs(y - 1.0)
                ax.plot(x, y, marker="o", label=f"xi{j}, r={r:g}")
        ax.set_xscale("log")
        if kind == "ratio":
            ax.set_yscale("log")
        else:
            ax.axhline(0.0, color="gray", lw=0.8)
        ax.set_xlabel("sqrt(n1 n2)")
        ax.set_title(title, fontsize=9)
        ax.legend(fontsize=6)
    fig.tight_layout()
    return fig


def _lclt_figure(rows, config):
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for r, (x, y) in sorted(_series(rows, "corollary_ratio").items()):
        ax.plot(x, y, marker="o", label=f"exact / closed-form, r={r:g}")
    off = [row for row in rows if row.statistic == "offcenter_ratio"]
    if off:
        ax.plot([_size(off[0])], [off[0].value], marker="*", ms=10, ls="none",
                label="off-center point")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xlabel("sqrt(n1 n2)")
    ax.set_ylabel("probability ratio")
    ax.set_title("endpoint probability vs local-CLT constant", fontsize=9)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _limit_shape_figure(rows, config):
    stats = ("dt_mean", "dt_median", "dt_p90")
    fig, axes = plt.subplots(1, 3, figsize=(11.0, 3.4), sharey=True)
    variants = sorted({row.statistic.rsplit("_", 1)[1]
                       for row in rows
                       if row.statistic.startswith("dt_mean_") and "trend" not in row.statistic})
    for ax, stat in zip(axes, stats):
        for variant in variants:
            for r, (x, y) in sorted(_series(rows, f"{stat}_{variant}").items()):
                ax.plot(x, y, marker="o", label=f"{variant}, r={r:g}")
        ax.set_xlabel("n (square box side)")
        ax.set_title(stat, fontsize=9)
    axes[0].set_ylabel("tangential distance to limit curve")
    axes[0].legend(fontsize=6)
    fig.tight_layout()
    return fig


def _lln_figure(rows, config):
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for r, (x, y) in sorted(_series(rows, "n_points_scaled").items()):
        line, = ax.plot(x, y, marker="o", label=f"exact mean, r={r:g}")
        target = next(row.reference for row in rows
                      if row.statistic == "n_points_scaled" and row.r == r)
        ax.axhline(target, color=line.get_color(), lw=0.8, ls="--")
    for r, (x, y) in sorted(_series(rows, "n_points_scaled_mc").items()):
        ax.plot(x, y, marker="x", ls="none", label=f"Monte Carlo, r={r:g}")
    ax.set_xlabel("n (square box side)")
    ax.set_ylabel("lattice points / (n1 n2)^(1/3)")
    ax.set_title("scaled point-count mean vs limit (dashed)", fontsize=9)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _tv_figure(rows, config):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    trend = [row for row in rows
             if row.statistic.startswith("tv_r") and "_vs_r" in row.statistic]
    if trend:
        trend = sorted(trend, key=_size)
        axes[0].plot([_size(t) for t in trend], [t.value for t in trend], marker="o")
        axes[0].set_title(trend[0].statistic, fontsize=9)
    axes[0].set_xlabel("n (square box side)")
    axes[0].set_ylabel("total variation distance")
    names = ("tv_r_high_vs_uniform", "tv_r_low_vs_uniform", "tv_self")
    vals = {row.statistic: row for row in rows if row.statistic in names}
    xs = np.arange(len(names))
    axes[1].bar(xs, [vals[name].value for name in names if name in vals])
    axes[1].axhline(0.8, color="gray", lw=0.8, ls="--")
    axes[1].set_xticks(xs)
    axes[1].set_xticklabels(names, fontsize=6, rotation=20)
    axes[1].set_title("extreme-r distances vs 1 - 1/5", fontsize=9)
    fig.tight_layout()
    return fig


def _metrics_figure(rows, config):
    sub = config["metrics"]
    gen = RngStream(config["seed"], sub["stream_base"]).generator()
    dts, dhs = [], []
    for _ in range(min(SCATTER_PAIRS, sub["pair_count"])):
        p = random_convex_polyline(gen, sub["max_edges"])
        q = random_convex_polyline(gen, sub["max_edges"])
        dts.append(tangential_distance(p, q))
        dhs.append(hausdorff_distance(p, q))
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    ax.plot(dts, dhs, ".", ms=3, alpha=0.5)
    top = max(max(dts), max(dhs)) * 1.05
    ax.plot([0, top], [0, top], color="gray", lw=0.8)
    ax.set_xlim(0, top)
    ax.set_ylim(0, top)
    ax.set_xlabel("tangential distance")
    ax.set_ylabel("Hausdorff distance")
    ax.set_title("metric dominance: every pair below y = x", fontsize=9)
    fig.tight_layout()
    return fig


def _generic_figure(rows, config):
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    stats = sorted({row.statistic for row in rows})
    for stat in stats:
        for r, (x, y) in sorted(_series(rows, stat).items()):
            ax.plot(x, y, marker="o", label=f"{stat}, r={r:g}")
    ax.set_xlabel("sqrt(n1 n2)")
    ax.legend(fontsize=6)
    fig.tight_layout()
    return fig


_BUILDERS = {
    "calibration": _calibration_figure,
    "lclt": _lclt_figure,
    "limit-shape": _limit_shape_figure,
    "lln": _lln_figure,
    "tv": _tv_figure,
    "metrics": _metrics_figure,
}


def render_report_figures(report: Report, outdir) -> list[Path]:
    """Write one PNG per check family present in the report; return the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    by_check: dict[str, list[ReportRow]] = defaultdict(list)
    for row in report.rows:
        by_check[row.check_id].append(row)
    paths = []
    for check_id in sorted(by_check):
        builder = _BUILDERS.get(check_id, _generic_figure)
        fig = builder(by_check[check_id], report.config)
        path = outdir / f"{check_id.replace('-', '_')}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
