"""Time the numba and numpy backends on the hot kernels.

Each backend runs in its own interpreter since the choice is made at import
time from RESNET_AC_NUMBA. Usage::

    python benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from resnet_ac import backend_name, init_weights, kernels
from resnet_ac.experiments import desk_config, benchmark_spec
from resnet_ac.sim import run_episode

steps, repeat = int(sys.argv[1]), int(sys.argv[2])
spec = benchmark_spec()
rng = np.random.default_rng(0)
theta = init_weights(spec, rng).values
x = rng.uniform(0, 2, spec.n)
lay = spec.layout()
pre, phi, dphi, eta, jt = spec.buffers()

def best(fn, inner):
    fn()  # warm up / compile
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        for _ in range(inner):
            fn()
        ts.append((time.perf_counter() - t) / inner)
    return min(ts)

res = {"backend": backend_name()}
res["forward_us"] = 1e6 * best(lambda: kernels.forward(theta, x, spec.shortcut, lay, pre, phi, dphi, eta), 200)
res["jacobian_us"] = 1e6 * best(lambda: kernels.jacobian_t(theta, spec.shortcut, lay, phi, dphi, spec.n, jt), 200)
cfg = desk_config(horizon=steps * 1e-3)
res["episode_steps"] = steps
res["episode_s"] = best(lambda: run_episode(cfg, 0), 1)
print(json.dumps(res))
"""


def run(flag, steps, repeat):
    env = dict(os.environ, RESNET_AC_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", CHILD, str(steps), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000, help="episode length in steps")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rows = [run(f, args.steps, args.repeat) for f in ("1", "0")]
    print(f"{'backend':<8}{'forward us':>12}{'jacobian us':>13}{'episode s':>11}")
    for r in rows:
        print(f"{r['backend']:<8}{r['forward_us']:>12.1f}{r['jacobian_us']:>13.1f}{r['episode_s']:>11.3f}")
    fast, slow = rows
    print(f"episode speedup ({args.steps} steps): {slow['episode_s'] / fast['episode_s']:.1f}x")


if __name__ == "__main__":
    main()
