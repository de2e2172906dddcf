"""Report rendering: curvature-comb and curvature-graph figures plus CSV metrics.

The metrics CLI writes, alongside the delimited numbers, two figures into the
report directory:

- ``curve_comb.png``: the curve with its curvature comb (normal teeth of
  length proportional to curvature) and any reference curve overlaid;
- ``curvature_graph.png``: signed curvature against arc length with detected
  extrema marked.

Rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .nurbs import NurbsCurve, curvature_profile
from .quality import QualityReport

__all__ = ["write_metrics_csv", "render_figures", "write_report"]

_CSV_FIELDS = [
    "smoothness_order",
    "extrema_count",
    "variation",
    "max_rate",
    "bending_energy",
    "deviation_max",
    "deviation_min",
    "monotone",
    "lcg_residual",
]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_metrics_csv(report: QualityReport, path: str) -> None:
    """One metric per row, deterministic formatting."""
    rows = [
        ("smoothness_order", report.smoothness_order),
        ("extrema_count", len(report.extrema)),
        ("variation", report.variation),
        ("max_rate", report.max_rate),
        ("bending_energy", report.bending_energy),
        ("deviation_max", report.deviation_max),
        ("deviation_min", report.deviation_min),
        ("monotone", report.monotone),
        ("lcg_residual", report.lcg_residual),
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name, value in rows:
            writer.writerow([name, _fmt(value)])
        for i, (s, k) in enumerate(report.extrema):
            writer.writerow([f"extremum_{i}_s", _fmt(s)])
            writer.writerow([f"extremum_{i}_kappa", _fmt(k)])


def render_figures(
    curve: NurbsCurve,
    report: QualityReport,
    outdir: str,
    reference=None,
    comb_teeth: int = 120,
    comb_scale: float | None = None,
) -> list[str]:
    """Render the comb and curvature-graph figures; returns the file paths."""
    samples, tips = curvature_profile(curve, comb_teeth, comb_scale=comb_scale)
    lo, hi = curve.domain
    dense = curve.point(np.linspace(lo, hi, 600))

    paths = []
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(dense[:, 0], dense[:, 1], "-", color="#1f77b4", lw=1.6, label="curve")
    base = np.array([s.point for s in samples])
    for b, t in zip(base, tips):
        ax.plot([b[0], t[0]], [b[1], t[1]], color="#d62728", lw=0.5)
    ax.plot(tips[:, 0], tips[:, 1], color="#d62728", lw=0.8, label="curvature comb")
    if reference is not None:
        rlo, rhi = reference.domain
        rts = np.linspace(rlo, rhi, 400)
        rp = np.asarray([reference.point(t) for t in rts])
        ax.plot(rp[:, 0], rp[:, 1], "--", color="#2ca02c", lw=1.0, label="reference")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("curve with curvature comb")
    comb_path = os.path.join(outdir, "curve_comb.png")
    fig.savefig(comb_path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(comb_path)

    fig, ax = plt.subplots(figsize=(7, 4))
    ss = [s.s for s in samples]
    ks = [s.kappa for s in samples]
    ax.plot(ss, ks, "-", color="#1f77b4", lw=1.4)
    if report.extrema:
        ax.plot([s for s, _ in report.extrema], [k for _, k in report.extrema],
                "o", color="#d62728", ms=5, label="extrema")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("arc length s")
    ax.set_ylabel("curvature")
    ax.grid(True, alpha=0.3)
    ax.set_title(
        f"curvature graph  (variation {report.variation:.4g}, "
        f"energy {report.bending_energy:.4g})"
    )
    graph_path = os.path.join(outdir, "curvature_graph.png")
    fig.savefig(graph_path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(graph_path)
    return paths


def write_report(curve, report: QualityReport, outdir: str, reference=None) -> list[str]:
    """Write metrics.csv plus both figures into ``outdir``; returns all paths."""
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, "metrics.csv")
    write_metrics_csv(report, csv_path)
    return [csv_path] + render_figures(curve, report, outdir, reference=reference)
