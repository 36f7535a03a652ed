"""Acceptance suite: eight checks at their stated tolerances.

Each check prints one ``PASS``/``FAIL`` line. Run directly for the report
alone (``python tests/test_acceptance.py``) or through pytest, where every
check is also an assertion. Checks 3 and 4 share one 100-seed comparison and
take a few minutes on one core.
"""

import os
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from resnet_ac import (BlockSpec, ResNetSpec, compare_architectures, finite_diff_jacobian,
                       gradient_norm_profile, init_weights, metrics, resnet_jacobian, run_episode,
                       vec)
from resnet_ac.cli import main as cli_main
from resnet_ac.experiments import DESK_RUNS, desk_config, emod_config, realizable_config
from resnet_ac.jacobian import max_relative_error
from resnet_ac.montecarlo import worker_count

ACTS = ("tanh", "sigmoid", "identity")
HERE = os.path.dirname(os.path.abspath(__file__))


def _random_spec(r):
    n = int(r.integers(1, 6))
    blocks = []
    for _ in range(int(r.integers(1, 4))):
        k = int(r.integers(1, 3))
        widths = (n,) + tuple(int(w) for w in r.integers(1, 6, k)) + (n,)
        blocks.append(BlockSpec(widths, tuple(r.choice(ACTS, k))))
    return ResNetSpec(n, tuple(blocks), bool(r.integers(0, 2)))


def check_jacobian_oracle():
    r = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        spec = _random_spec(r)
        theta = r.uniform(-0.5, 0.5, spec.total_weight_count)
        x = r.uniform(-1.0, 1.0, spec.n)
        fd = finite_diff_jacobian(spec, theta, x, h=1e-6)
        worst = max(worst, max_relative_error(resnet_jacobian(spec, theta, x), fd))
    dt = time.perf_counter() - t0
    return worst < 1e-5 and dt < 10, f"max rel err {worst:.2e} (< 1e-5), {dt:.2f} s (< 10 s)"


def check_vanishing_gradient():
    r = np.random.default_rng(202)
    spec = ResNetSpec.uniform(10, 20, 1, 10, "tanh", True)
    plain = spec.with_shortcut(False)
    t0 = time.perf_counter()
    res, fc = [], []
    for _ in range(100):
        theta = init_weights(spec, r, -0.05, 0.05).values
        x = r.uniform(0.0, 2.0, spec.n)
        res.append(gradient_norm_profile(spec, theta, x))
        fc.append(gradient_norm_profile(plain, theta, x))
    ratio = np.median(res, axis=0)[:10] / np.median(fc, axis=0)[:10]
    dt = time.perf_counter() - t0
    return (bool(ratio.min() >= 10) and dt < 30,
            f"min median ratio over blocks 1-10 = {ratio.min():.3g} (>= 10), {dt:.2f} s (< 30 s)")


@lru_cache(maxsize=1)
def desk_comparison():
    t0 = time.perf_counter()
    res = compare_architectures(desk_config(), DESK_RUNS, 0, worker_count(None))
    best = {k: (v.best.metrics if not isinstance(v, Exception) else None)
            for k, v in res.items()}
    return best, time.perf_counter() - t0


def check_table_direction():
    best, secs = desk_comparison()
    rn, fc = best["resnet"], best["fully_connected"]
    if rn is None or fc is None:
        return False, "a batch diverged on every seed"
    de = 1 - rn["e_rms"] / fc["e_rms"]
    df = 1 - rn["f_rms"] / fc["f_rms"]
    du = rn["u_rms"] / fc["u_rms"] - 1
    ok = de >= 0.4 and df >= 0.4 and abs(du) <= 0.15
    return ok, (f"e_rms {rn['e_rms']:.3f} vs {fc['e_rms']:.3f} ({de:.1%} lower, need 40%), "
                f"f_rms {rn['f_rms']:.3f} vs {fc['f_rms']:.3f} ({df:.1%} lower, need 40%), "
                f"u_rms {rn['u_rms']:.3f} vs {fc['u_rms']:.3f} ({du:+.1%}, need within 15%), "
                f"batch {secs:.0f} s")


def check_shallow_ordering():
    best, _ = desk_comparison()
    if any(v is None for v in best.values()):
        return False, "a batch diverged on every seed"
    e = {k: v["e_rms"] for k, v in best.items()}
    between = all(1.2 * e["resnet"] <= e[s] < e["fully_connected"]
                  for s in ("shallow_10", "shallow_100"))
    ok = between and e["shallow_100"] < e["shallow_10"]
    return ok, (f"e_rms resnet {e['resnet']:.3f}, shallow_100 {e['shallow_100']:.3f}, "
                f"shallow_10 {e['shallow_10']:.3f}, fully_connected {e['fully_connected']:.3f}")


def check_realizable_tracking():
    cfg = realizable_config()
    log = run_episode(cfg, 0)
    enorm = np.linalg.norm(log.e, axis=1)
    tail = float(enorm[log.t >= log.horizon - 1.0].mean())
    rise = float(np.max(np.diff(log.lyapunov)))
    ok = tail < 1e-2 and rise <= 10 * cfg.dt
    return ok, (f"mean |e| over final 1 s = {tail:.2e} (< 1e-2), "
                f"largest V_L increase {rise:.2e} (<= {10 * cfg.dt:g})")


def check_emod_bound():
    cfg = emod_config()
    log = run_episode(cfg, 0)
    m = metrics(log)
    theta0 = np.linalg.norm(log.snapshots[0])
    peak = max(np.linalg.norm(log.snapshots, axis=1).max(), np.linalg.norm(log.final_theta))
    finite = all(np.isfinite(m[k]) for k in ("e_rms", "f_rms", "u_rms"))
    ok = m["ultimate_bound"] <= 0.3 and finite and peak <= 10 * theta0
    return ok, (f"ultimate bound {m['ultimate_bound']:.3f} (<= 0.3), "
                f"peak |theta| / initial = {peak / theta0:.2f} (<= 10), finite={finite}")


def check_determinism(tmp):
    cfg = os.path.join(HERE, "..", "configs", "desk.json")
    base = ["montecarlo", "--config", cfg, "--runs", "8", "--horizon", "1.0", "--seed", "3"]
    outs = {}
    for tag, workers in (("s1", 1), ("s2", 1), ("p1", 8), ("p2", 8)):
        d = os.path.join(tmp, tag)
        old = os.environ.pop("RESNET_AC_THREADS", None)
        try:
            code = cli_main([*base, "--workers", str(workers), "--out", d])
        finally:
            if old is not None:
                os.environ["RESNET_AC_THREADS"] = old
        if code != 0:
            return False, f"montecarlo exited {code}"
        with open(os.path.join(d, "batch.csv"), "rb") as fh:
            outs[tag] = fh.read()
    same = outs["s1"] == outs["s2"] and outs["p1"] == outs["p2"] and outs["s1"] == outs["p1"]
    return same, "batch.csv identical across serial and 8-worker repeats" if same else \
        "batch.csv differs between executions"


def check_vec_identity():
    r = np.random.default_rng(808)
    worst = 0.0
    for _ in range(1000):
        a, b, c, d = r.integers(1, 5, 4)
        A, B, C = r.normal(size=(a, b)), r.normal(size=(b, c)), r.normal(size=(c, d))
        lhs, rhs = vec(A @ B @ C), np.kron(C.T, A) @ vec(B)
        scale = np.linalg.norm(A) * np.linalg.norm(B) * np.linalg.norm(C)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))
    eps = np.finfo(float).eps
    return worst <= 16 * eps, f"max scaled error {worst:.2e} (<= 16 eps = {16 * eps:.1e})"


CHECKS = [
    (1, "Jacobian matches finite differences", check_jacobian_oracle),
    (2, "shortcuts keep early-block gradients", check_vanishing_gradient),
    (3, "ResNet beats fully-connected at desk scale", check_table_direction),
    (4, "shallow nets sit between, 100 beats 10", check_shallow_ordering),
    (5, "realizable drift: asymptotic tracking", check_realizable_tracking),
    (6, "e-modification ultimate bound", check_emod_bound),
    (7, "batch CSVs are deterministic", check_determinism),
    (8, "vec(ABC) = (C^T kron A) vec(B)", check_vec_identity),
]


def _line(k, title, ok, detail):
    return f"[acceptance {k}] {'PASS' if ok else 'FAIL'} {title}: {detail}"


def _run(k, fn, *args):
    ok, detail = fn(*args)
    return ok, _line(k, dict((c[0], c[1]) for c in CHECKS)[k], ok, detail)


def _pytest_check(capsys, k, fn, *args):
    ok, line = _run(k, fn, *args)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_acceptance_1_jacobian_oracle(capsys):
    _pytest_check(capsys, 1, check_jacobian_oracle)


def test_acceptance_2_vanishing_gradient(capsys):
    _pytest_check(capsys, 2, check_vanishing_gradient)


@pytest.mark.slow
def test_acceptance_3_resnet_vs_fully_connected(capsys):
    _pytest_check(capsys, 3, check_table_direction)


@pytest.mark.slow
def test_acceptance_4_shallow_ordering(capsys):
    _pytest_check(capsys, 4, check_shallow_ordering)


def test_acceptance_5_realizable_tracking(capsys):
    _pytest_check(capsys, 5, check_realizable_tracking)


def test_acceptance_6_emod_bound(capsys):
    _pytest_check(capsys, 6, check_emod_bound)


def test_acceptance_7_determinism(capsys, tmp_path):
    _pytest_check(capsys, 7, check_determinism, str(tmp_path))


def test_acceptance_8_vec_identity(capsys):
    _pytest_check(capsys, 8, check_vec_identity)


if __name__ == "__main__":
    import tempfile

    failed = 0
    for k, _, fn in CHECKS:
        args = (tempfile.mkdtemp(),) if fn is check_determinism else ()
        ok, line = _run(k, fn, *args)
        failed += not ok
        print(line, flush=True)
    sys.exit(1 if failed else 0)
