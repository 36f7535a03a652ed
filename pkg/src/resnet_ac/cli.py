"""Command-line entry points.

Exit codes: 0 ok, 1 runtime failure, 2 usage or config error, 3 divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from ._accel import backend_name
from .config import (ConfigError, apply_overrides, build_sim_config, load_config,
                     plant_sampler, snapshot_indices)
from .io import (RunManifest, read_csv_columns, write_batch_csv, write_snapshot_csv,
                 write_summary_csv, write_trajectory_csv)
from .jacobian import gradcheck, gradient_norm_profile
from .montecarlo import (BatchFailure, compare_architectures, format_summary, run_batch,
                         summary_rows)
from .plotting import emit_batch_plot, emit_trajectory_plots, emit_weight_plot
from .resnet import ResNetSpec, init_weights
from .sim import DivergenceError, metrics, run_episode

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
GRADCHECK_MAX_WEIGHTS = 2000
GRADCHECK_TOL = 1e-5

log = logging.getLogger("resnet_ac")


class UsageError(Exception):
    pass


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _resolve(args):
    if args.config and not os.path.isfile(args.config):
        raise UsageError(f"config file not found: {args.config}")
    cfg = load_config(args.config)
    over = _parse_set(args.set)
    if getattr(args, "horizon", None) is not None:
        over["horizon_s"] = args.horizon
    if getattr(args, "dt", None) is not None:
        over["dt"] = args.dt
    if getattr(args, "seed", None) is not None:
        over["weight_seed_base"] = args.seed
    if getattr(args, "runs", None) is not None:
        over["runs"] = args.runs
    return apply_overrides(cfg, over) if over else cfg


def _finish(args, cfg, seeds, outputs, t0, extra_timings=None):
    path = os.path.join(args.out, "manifest.json")
    timings = {"total_s": time.perf_counter() - t0, **(extra_timings or {})}
    RunManifest(cfg, seeds, __version__, backend_name(), list(outputs), timings).write(path)
    return path


def cmd_simulate(args):
    t0 = time.perf_counter()
    cfg = _resolve(args)
    sim = build_sim_config(cfg)
    os.makedirs(args.out, exist_ok=True)
    seed = cfg["weight_seed_base"]
    traj = run_episode(sim, seed)
    t_sim = time.perf_counter() - t0
    tpath = os.path.join(args.out, "trajectory.csv")
    wpath = os.path.join(args.out, "weights.csv")
    write_trajectory_csv(tpath, traj)
    write_snapshot_csv(wpath, traj, snapshot_indices(cfg, sim.spec.total_weight_count))
    m = metrics(traj, cfg["Q"], cfg["R"])
    print(" ".join(f"{k}={v:.6g}" for k, v in m.items()))
    _finish(args, cfg, {"plant_seed": cfg["plant_seed"], "weight_seed": seed},
            [tpath, wpath], t0, {"simulate_s": t_sim})
    return EXIT_OK


def cmd_montecarlo(args):
    t0 = time.perf_counter()
    cfg = _resolve(args)
    sim = build_sim_config(cfg)
    os.makedirs(args.out, exist_ok=True)
    base, runs = cfg["weight_seed_base"], cfg["runs"]
    Q, R = cfg["Q"], cfg["R"]
    sampler = plant_sampler(cfg)
    if args.compare:
        results = compare_architectures(sim, runs, base, args.workers, Q, R, sampler)
    else:
        try:
            res = run_batch(sim, runs, base, args.workers, None, Q, R, sampler)
        except BatchFailure as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        results = {res.architecture: res}
    done = [r for r in results.values() if not isinstance(r, Exception)]
    bpath = os.path.join(args.out, "batch.csv")
    spath = os.path.join(args.out, "summary.csv")
    write_batch_csv(bpath, done)
    rows = summary_rows(results)
    write_summary_csv(spath, rows)
    print(format_summary(rows))
    for label, r in results.items():
        if isinstance(r, Exception):
            print(f"warning: {r}", file=sys.stderr)
        elif len(r.completed) < len(r.records):
            print(f"{label}: {len(r.records) - len(r.completed)} of {len(r.records)} runs "
                  "diverged", file=sys.stderr)
    seeds = {"plant_seed": cfg["plant_seed"], "weight_seeds": list(range(base, base + runs))}
    _finish(args, cfg, seeds, [bpath, spath], t0)
    return EXIT_OK if done else EXIT_DIVERGED


def cmd_compare(args):
    args.compare = True
    return cmd_montecarlo(args)


def cmd_gradcheck(args):
    spec = ResNetSpec.uniform(args.n, args.blocks, args.hidden_layers, args.width,
                              args.activation, not args.no_shortcut)
    rng = np.random.default_rng(args.seed)
    if args.profile:
        return _profile(args, rng)
    if spec.total_weight_count > GRADCHECK_MAX_WEIGHTS:
        raise UsageError(
            f"spec has {spec.total_weight_count} weights; finite differences are capped at "
            f"{GRADCHECK_MAX_WEIGHTS}. Reduce --blocks, --width or --hidden-layers.")
    theta = init_weights(spec, rng, -args.scale, args.scale)
    x = rng.uniform(-1.0, 1.0, spec.n)
    rows = gradcheck(spec, theta, x, args.h, corrupt=args.corrupt)
    worst = 0.0
    print(f"{'block':>5} {'layer':>5} {'rel_err':>12}")
    for p, j, err in rows:
        worst = max(worst, err)
        print(f"{p:>5} {j:>5} {err:>12.3e}")
    ok = worst < args.tol
    print(f"max relative error {worst:.3e} ({'pass' if ok else 'FAIL'}, tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_RUNTIME


def _profile(args, rng):
    """Median per-block Jacobian norm with and without shortcuts."""
    spec = ResNetSpec.uniform(args.n, args.blocks, args.hidden_layers, args.width,
                              args.activation, True)
    plain = spec.with_shortcut(False)
    res, fc = [], []
    for _ in range(args.draws):
        theta = init_weights(spec, rng, -args.scale, args.scale).values
        x = rng.uniform(-1.0, 1.0, spec.n)
        res.append(gradient_norm_profile(spec, theta, x))
        fc.append(gradient_norm_profile(plain, theta, x))
    res, fc = np.median(res, axis=0), np.median(fc, axis=0)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "gradient_profile.csv")
    with open(path, "w") as fh:
        fh.write("block_index,frobenius_norm_resnet,frobenius_norm_fc\n")
        for p in range(spec.num_blocks):
            fh.write(f"{p},{res[p]!r},{fc[p]!r}\n")
    print(f"wrote {path}")
    return EXIT_OK


def _labelled(items):
    out = {}
    for item in items or ():
        label, _, path = item.rpartition("=")
        out[label or os.path.splitext(os.path.basename(path))[0]] = path
    return out


def cmd_plot(args):
    os.makedirs(args.out, exist_ok=True)
    trajs = {k: read_csv_columns(p) for k, p in _labelled(args.trajectory).items()}
    paths = emit_trajectory_plots(trajs, args.out) if trajs else []
    if args.weights:
        paths += emit_weight_plot(read_csv_columns(args.weights), args.out)
    if args.batch:
        paths += emit_batch_plot(read_csv_columns(args.batch), args.out)
    if not paths:
        log.warning("nothing plotted")
    for p in paths:
        print(p)
    return EXIT_OK


def _add_run_opts(sp, batch=False):
    sp.add_argument("--config", help="JSON config file (a run manifest also works)")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override one config key; repeatable")
    sp.add_argument("--out", default="out", help="output directory (default: out)")
    sp.add_argument("--horizon", type=float, help="horizon in seconds")
    sp.add_argument("--dt", type=float, help="integration step in seconds")
    sp.add_argument("--seed", type=int, help="weight seed (base seed for batches)")
    if batch:
        sp.add_argument("--runs", type=int, help="weight seeds per architecture")
        sp.add_argument("--workers", type=int, default=1,
                        help="worker threads (capped by RESNET_AC_THREADS)")


def build_parser():
    ap = argparse.ArgumentParser(prog="resnet-ac", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run one closed-loop episode")
    _add_run_opts(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("montecarlo", help="batch over weight seeds on one plant")
    _add_run_opts(sp, batch=True)
    sp.add_argument("--compare", action="store_true",
                    help="run ResNet, fully-connected, shallow-10 and shallow-100")
    sp.set_defaults(func=cmd_montecarlo)

    sp = sub.add_parser("compare", help="same as montecarlo --compare")
    _add_run_opts(sp, batch=True)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("gradcheck", help="analytic vs finite-difference weight Jacobian")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--blocks", type=int, default=3)
    sp.add_argument("--hidden-layers", type=int, default=2)
    sp.add_argument("--width", type=int, default=4)
    sp.add_argument("--activation", default="tanh", choices=("tanh", "sigmoid", "identity"))
    sp.add_argument("--no-shortcut", action="store_true")
    sp.add_argument("--scale", type=float, default=0.5, help="weights ~ U(-scale, scale)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--h", type=float, default=1e-6, help="finite-difference step")
    sp.add_argument("--tol", type=float, default=GRADCHECK_TOL)
    sp.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    sp.add_argument("--profile", action="store_true",
                    help="write per-block Jacobian norms with and without shortcuts")
    sp.add_argument("--draws", type=int, default=100, help="draws for --profile")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("plot", help="SVG plots from trajectory, weight or batch CSVs")
    sp.add_argument("--trajectory", action="append", metavar="[LABEL=]CSV")
    sp.add_argument("--weights", metavar="CSV")
    sp.add_argument("--batch", metavar="CSV")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_plot)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
