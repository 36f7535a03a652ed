"""Minimal SVG line plots; no display or plotting library needed."""

from __future__ import annotations

import logging
import math
import os
from xml.sax.saxutils import escape

import numpy as np

log = logging.getLogger(__name__)

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

W, H = 640, 400
ML, MR, MT, MB = 70, 150, 40, 50


def _nice_range(lo, hi):
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi <= lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    pad = 0.02 * (hi - lo)
    return lo - pad, hi + pad


def line_plot_svg(series, title="", xlabel="", ylabel=""):
    """Render ``[(label, xs, ys), ...]`` as one SVG string, one polyline per series.

    Axis ranges enclose every finite data point.
    """
    xs_all = np.concatenate([np.asarray(s[1], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], float) for s in series])
    fx, fy = xs_all[np.isfinite(xs_all)], ys_all[np.isfinite(ys_all)]
    x0, x1 = _nice_range(fx.min(), fx.max()) if fx.size else (0.0, 1.0)
    y0, y1 = _nice_range(fy.min(), fy.max()) if fy.size else (0.0, 1.0)
    pw, ph = W - ML - MR, H - MT - MB

    def px(v):
        return ML + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MT + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" data-xmin="{x0!r}" data-xmax="{x1!r}" '
           f'data-ymin="{y0!r}" data-ymax="{y1!r}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
           f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 16 {MT + ph / 2})">{escape(ylabel)}</text>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{px(xv):.1f}" y="{MT + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{xv:.3g}</text>')
        out.append(f'<text x="{ML - 6}" y="{py(yv) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{yv:.3g}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}"
                       for a, b in zip(np.asarray(xs, float), np.asarray(ys, float))
                       if math.isfinite(a) and math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                   f'points="{pts}"><title>{escape(str(label))}</title></polyline>')
        ly = MT + 14 + 16 * k
        out.append(f'<line x1="{W - MR + 10}" y1="{ly - 4}" x2="{W - MR + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 35}" y="{ly}" font-size="11">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)
    return path


def emit_trajectory_plots(trajectories, out_dir, prefix=""):
    """``trajectories`` maps label -> column dict (see ``io.read_csv_columns``).

    Writes one figure for |e| and one for |f~|, one series per label.
    """
    trajectories = {k: v for k, v in trajectories.items() if v and len(v.get("t", [])) > 0}
    if not trajectories:
        log.warning("no trajectory data to plot")
        return []
    paths = []
    for col, name, ylabel in (("e_norm", "tracking_error", "|e|"),
                              ("f_err_norm", "approx_error", "|f - Phi|")):
        series = [(lab, d["t"], d[col]) for lab, d in trajectories.items()]
        svg = line_plot_svg(series, f"{ylabel} over time", "t [s]", ylabel)
        paths.append(_write(os.path.join(out_dir, f"{prefix}{name}.svg"), svg))
    return paths


def emit_weight_plot(snapshots, out_dir, prefix=""):
    """Weight trajectories from a snapshot column dict."""
    if not snapshots or len(snapshots.get("t", [])) == 0:
        log.warning("no weight snapshots to plot")
        return []
    series = [(k, snapshots["t"], v) for k, v in snapshots.items() if k != "t"]
    svg = line_plot_svg(series, "selected weight estimates", "t [s]", "weight")
    return [_write(os.path.join(out_dir, f"{prefix}weights.svg"), svg)]


def emit_batch_plot(batch, out_dir, prefix=""):
    """Cost J against seed, one series per architecture."""
    if not batch or len(batch.get("seed", [])) == 0:
        log.warning("empty batch, nothing to plot")
        return []
    arch = np.array(batch["architecture"])
    series = []
    for lab in dict.fromkeys(batch["architecture"]):
        mask = arch == lab
        series.append((lab, batch["seed"][mask], batch["J"][mask]))
    svg = line_plot_svg(series, "cost J per weight seed", "seed", "J")
    return [_write(os.path.join(out_dir, f"{prefix}batch_cost.svg"), svg)]
