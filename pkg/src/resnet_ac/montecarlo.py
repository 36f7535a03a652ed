"""Monte Carlo over initial weights and the four-architecture comparison."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .resnet import ResNetSpec, unvec
from .sim import DivergenceError, metrics, run_episode

ARCHITECTURES = ("resnet", "fully_connected", "shallow_10", "shallow_100")
BATCH_COLUMNS = ("architecture", "seed", "J", "e_rms", "f_rms", "u_rms", "diverged")


class BatchFailure(RuntimeError):
    """Every run in a batch diverged."""


@dataclass(frozen=True)
class RunRecord:
    seed: int
    metrics: dict | None
    diverged: bool

    @property
    def J(self):
        return self.metrics["J"] if self.metrics else float("nan")


@dataclass(frozen=True)
class BatchResult:
    architecture: str
    records: tuple[RunRecord, ...]

    @property
    def completed(self):
        return [r for r in self.records if not r.diverged]

    @property
    def best(self):
        done = self.completed
        if not done:
            raise BatchFailure(f"{self.architecture}: all {len(self.records)} runs diverged")
        return min(done, key=lambda r: (r.J, r.seed))

    @property
    def best_seed(self):
        return self.best.seed

    def quantiles(self, key, qs=(0.25, 0.5, 0.75)):
        vals = np.array([r.metrics[key] for r in self.completed])
        return dict(zip(qs, np.quantile(vals, qs))) if vals.size else {}

    def rows(self):
        for r in self.records:
            m = r.metrics or {}
            yield (self.architecture, r.seed, m.get("J", float("nan")),
                   m.get("e_rms", float("nan")), m.get("f_rms", float("nan")),
                   m.get("u_rms", float("nan")), int(r.diverged))


def worker_count(requested=None):
    """Requested workers, capped by ``RESNET_AC_THREADS`` when set."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("RESNET_AC_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _one_run(config, seed, Q, R, plant_sampler=None):
    if plant_sampler is not None:
        plant, x0, ref = plant_sampler(seed)
        config = config.replace(plant=plant, x0=x0, reference=ref)
    try:
        log = run_episode(config, seed)
    except DivergenceError:
        return RunRecord(seed, None, True)
    return RunRecord(seed, metrics(log, Q, R), False)


def run_batch(config, num_runs, base_seed=0, workers=1, label=None, Q=1.0, R=0.01,
              plant_sampler=None):
    """Run seeds ``base_seed .. base_seed + num_runs - 1`` on one plant.

    ``plant_sampler(seed) -> (plant, x0, reference)``, when given, draws a
    fresh plant for every run instead. Raises :class:`BatchFailure` when
    every run diverged.
    """
    if num_runs < 1:
        raise ValueError("num_runs must be >= 1")
    seeds = range(base_seed, base_seed + num_runs)
    workers = worker_count(workers)
    if workers == 1:
        records = [_one_run(config, s, Q, R, plant_sampler) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda s: _one_run(config, s, Q, R, plant_sampler), seeds))
    result = BatchResult(label or _label(config.spec), tuple(records))
    result.best  # raises BatchFailure if nothing finished
    return result


def _label(spec):
    if spec.num_blocks == 1 and not spec.shortcut and spec.blocks[0].hidden_layers == 1:
        return f"shallow_{spec.blocks[0].widths[1]}"
    return "resnet" if spec.shortcut else "fully_connected"


def architecture_specs(spec):
    """ResNet, the same net without shortcuts, and shallow nets of 10 and 100 units."""
    act = spec.blocks[0].activations[0]
    return {
        "resnet": spec.with_shortcut(True),
        "fully_connected": spec.with_shortcut(False),
        "shallow_10": ResNetSpec.shallow(spec.n, 10, act),
        "shallow_100": ResNetSpec.shallow(spec.n, 100, act),
    }


def compare_architectures(config, num_runs, base_seed=0, workers=1, Q=1.0, R=0.01,
                          plant_sampler=None):
    """Batch every architecture on the same plant and seed sequence.

    Returns ``{label: BatchResult or BatchFailure}``; a failing row does not
    stop the others.
    """
    out = {}
    for label, spec in architecture_specs(config.spec).items():
        try:
            out[label] = run_batch(config.replace(spec=spec), num_runs, base_seed,
                                   workers, label, Q, R, plant_sampler)
        except BatchFailure as exc:
            out[label] = exc
    return out


def summary_rows(results):
    """Best-J metrics per architecture, one row each."""
    rows = []
    for label, res in results.items():
        if isinstance(res, Exception):
            rows.append((label, None, float("nan"), float("nan"), float("nan"), float("nan")))
            continue
        b = res.best
        rows.append((label, b.seed, b.J, b.metrics["e_rms"], b.metrics["f_rms"],
                     b.metrics["u_rms"]))
    return rows


def format_summary(rows):
    head = f"{'Architecture':<18}{'seed':>6}{'J':>11}{'|e_rms|':>10}{'|f_rms|':>10}{'|u_rms|':>10}"
    lines = [head, "-" * len(head)]
    for label, seed, J, e, f, u in rows:
        s = "-" if seed is None else str(seed)
        lines.append(f"{label:<18}{s:>6}{J:>11.3f}{e:>10.3f}{f:>10.3f}{u:>10.3f}")
    return "\n".join(lines)


def shallow_forward(V0, V1, x):
    """``V1^T tanh(V0^T x)``."""
    return np.asarray(V1).T @ np.tanh(np.asarray(V0).T @ np.asarray(x, dtype=float))


def shallow_weights(theta, n, hidden):
    """Split a shallow net's flat weights into (V0, V1)."""
    theta = np.asarray(theta)
    k = n * hidden
    return unvec(theta[:k], n, hidden), unvec(theta[k:2 * k], hidden, n)
