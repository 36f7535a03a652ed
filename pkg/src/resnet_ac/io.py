"""CSV and manifest writers/readers for trajectories and batches."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .montecarlo import BATCH_COLUMNS


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_trajectory_csv(path, log):
    """Columns ``t, x_1..x_n, xd_1..xd_n, e_norm, u_norm, f_err_norm``."""
    n = log.x.shape[1]
    header = (["t"] + [f"x_{i + 1}" for i in range(n)] + [f"xd_{i + 1}" for i in range(n)]
              + ["e_norm", "u_norm", "f_err_norm"])
    e_norm = np.linalg.norm(log.e, axis=1)
    u_norm = np.linalg.norm(log.u, axis=1)
    f_norm = np.linalg.norm(log.f_err, axis=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(log.t)):
            w.writerow([_fmt(log.t[k])] + [_fmt(v) for v in log.x[k]]
                       + [_fmt(v) for v in log.xd[k]]
                       + [_fmt(e_norm[k]), _fmt(u_norm[k]), _fmt(f_norm[k])])


def write_snapshot_csv(path, log, indices):
    """Columns ``t, w_<i>`` for each selected weight index."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"w_{i}" for i in indices])
        for t, snap in zip(log.snapshot_t, log.snapshots):
            w.writerow([_fmt(t)] + [_fmt(snap[i]) for i in indices])


def write_batch_csv(path, results):
    """``results`` is one BatchResult or an iterable of them."""
    if hasattr(results, "records"):
        results = [results]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BATCH_COLUMNS)
        for res in results:
            for row in res.rows():
                w.writerow([row[0]] + [_fmt(v) for v in row[1:]])


def write_summary_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["architecture", "best_seed", "J", "e_rms", "f_rms", "u_rms"])
        for label, seed, J, e, f, u in rows:
            w.writerow([label, "" if seed is None else seed, _fmt(J), _fmt(e), _fmt(f), _fmt(u)])


def read_csv_columns(path):
    """Read a numeric CSV into ``{column: np.ndarray}``; text columns stay lists."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {}
        cols = [[] for _ in header]
        for row in reader:
            for c, v in zip(cols, row):
                c.append(v)
    out = {}
    for name, vals in zip(header, cols):
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = vals
    return out


@dataclass
class RunManifest:
    config: dict
    seeds: dict
    artifact_version: str
    backend: str
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def write(self, path):
        missing = [p for p in self.outputs if not os.path.exists(p)]
        if missing:
            raise FileNotFoundError(f"manifest lists missing outputs: {missing}")
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
