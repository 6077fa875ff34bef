"""Render log-log scaling figures from bench CSV output.

Input is the documented bench schema
(`experiment,x,trial,n,R,metric,value,seed,failed`); only summary rows
(trial = -1) are plotted. The fitted slope and its standard error go to a
sidecar text file `<output>.slope.txt` as `slope=<v> stderr=<e>`, so CI can
diff numbers without comparing images. Rendering is a pure function of the
CSV: identical input bytes give identical sidecar bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

EXPECTED_COLUMNS = ["experiment", "x", "trial", "n", "R", "metric", "value",
                    "seed", "failed"]


class RenderError(Exception):
    pass


@dataclass
class FigureSpec:
    input_csv: str
    experiment: str
    output: str
    metric: Optional[str] = None
    expected_slope: Optional[float] = None


def fit_loglog(points: list[tuple[float, float]]) -> tuple[float, float]:
    """OLS slope of log2(y) on log2(x) with standard error (own fit, kept
    independent of the producer's implementation)."""
    xs = np.log2([p[0] for p in points])
    ys = np.log2([p[1] for p in points])
    slope, intercept = np.polyfit(xs, ys, 1)
    m = len(points)
    if m > 2:
        resid = ys - (intercept + slope * xs)
        sxx = float(((xs - xs.mean()) ** 2).sum())
        stderr = float(np.sqrt((resid ** 2).sum() / (m - 2) / sxx))
    else:
        stderr = 0.0
    return float(slope), stderr


def load_summary_points(csv_text: str, experiment: str,
                        metric: Optional[str]):
    """Summary-row (x, value) points for one experiment/metric.

    Raises RenderError naming the missing column, the empty experiment
    filter, or the ambiguous metric set.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise RenderError("empty CSV") from None
    for col in EXPECTED_COLUMNS:
        if col not in header:
            raise RenderError(f"missing column: {col}")
    idx = {c: header.index(c) for c in EXPECTED_COLUMNS}
    rows = [r for r in reader if r and r[idx["experiment"]] == experiment]
    if not rows:
        raise RenderError(f"no rows for experiment: {experiment}")
    summaries = [r for r in rows if r[idx["trial"]] == "-1"
                 and r[idx["failed"]] == "0"]
    metrics = sorted({r[idx["metric"]] for r in summaries})
    if metric is None:
        if len(metrics) != 1:
            raise RenderError(
                f"experiment {experiment} has metrics {metrics}; pass --metric")
        metric = metrics[0]
    elif metric not in metrics:
        raise RenderError(f"metric {metric} not in {metrics} "
                          f"for experiment {experiment}")
    pts = sorted((float(r[idx["x"]]), float(r[idx["value"]]))
                 for r in summaries if r[idx["metric"]] == metric)
    if len({p[0] for p in pts}) < 2:
        raise RenderError(f"need >= 2 distinct x values for {experiment}; "
                          f"got {sorted({p[0] for p in pts})}")
    return pts, metric


def render_scaling(spec: FigureSpec) -> tuple[float, float]:
    """Write the figure and its slope sidecar; returns (slope, stderr)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(spec.input_csv) as fh:
        csv_text = fh.read()
    pts, metric = load_summary_points(csv_text, spec.experiment, spec.metric)
    slope, stderr = fit_loglog(pts)

    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    ax.scatter(xs, ys, zorder=3, label="summary means")
    grid = np.geomspace(xs.min(), xs.max(), 64)
    anchor = ys[0] / xs[0] ** slope
    ax.plot(grid, anchor * grid ** slope, "--",
            label=f"fit: slope {slope:.3f} ± {stderr:.3f}")
    if spec.expected_slope is not None:
        ax.plot(grid, ys[0] / xs[0] ** spec.expected_slope
                * grid ** spec.expected_slope, ":",
                label=f"expected slope {spec.expected_slope:g}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("x  (load factor 1 - 1/x)")
    ax.set_ylabel(metric)
    ax.set_title(spec.experiment)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=110)
    plt.close(fig)

    with open(spec.output + ".slope.txt", "w") as fh:
        fh.write(f"slope={slope!r} stderr={stderr!r}\n")
    return slope, stderr
