"""Ground-truth plant ``xdot = f(x) + u`` and the sinusoidal reference."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .resnet import ResNetSpec, WeightVector, resnet_forward


def feature_map(x):
    """``[x, tanh x, sin x, sech x, x*x, x*x*x]`` stacked, length 6n."""
    return kernels.features(np.ascontiguousarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class PlantModel:
    """Drift ``f(x) = A y(x)``, or ``f = Phi^{theta*}`` for the realizable fixture."""

    A: np.ndarray | None = None
    theta_star: WeightVector | None = None

    def __post_init__(self):
        if (self.A is None) == (self.theta_star is None):
            raise ValueError("give exactly one of A or theta_star")
        if self.A is not None:
            A = np.ascontiguousarray(self.A, dtype=float)
            if A.ndim != 2 or A.shape[1] != 6 * A.shape[0]:
                raise ValueError(f"A must be n x 6n, got {A.shape}")
            object.__setattr__(self, "A", A)

    @classmethod
    def realizable(cls, theta_star):
        return cls(theta_star=theta_star)

    @property
    def is_realizable(self):
        return self.theta_star is not None

    @property
    def n(self):
        return self.A.shape[0] if self.A is not None else self.theta_star.spec.n

    @property
    def spec(self) -> ResNetSpec | None:
        return self.theta_star.spec if self.theta_star is not None else None


def drift(plant, x):
    x = np.ascontiguousarray(x, dtype=float)
    if plant.is_realizable:
        return resnet_forward(plant.spec, plant.theta_star, x)[0]
    return plant.A @ feature_map(x)


@dataclass(frozen=True, eq=False)
class ReferenceSpec:
    """``x_d,i(t) = 0.5 + sin(omega_i t)``."""

    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.ascontiguousarray(self.omega, dtype=float))


def reference(refspec, t):
    """Desired state and its time derivative at ``t``."""
    w = refspec.omega
    return 0.5 + np.sin(w * t), w * np.cos(w * t)


def sample_plant(rng, n, a_high=0.1, x0_high=2.0, omega_high=20.0):
    """Draw ``A ~ U(0, a_high)``, ``x0 ~ U(0, x0_high)``, ``omega ~ U(0, omega_high)``.

    The draws happen in that order from ``rng``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    A = rng.uniform(0.0, a_high, (n, 6 * n))
    x0 = rng.uniform(0.0, x0_high, n)
    omega = rng.uniform(0.0, omega_high, n)
    return PlantModel(A=A), x0, ReferenceSpec(omega)


def feedback_only_bounded(plant, x0, refspec, sigma_e=2.0, sigma_s=2.0,
                          horizon=10.0, dt=1e-3):
    """True if the loop with no network term (u = xd_dot - sigma_e e - sigma_s sgn e)
    stays bounded over the horizon."""
    from .control import Gains
    from .sim import SimConfig, run_episode, DivergenceError

    n = plant.n
    spec = ResNetSpec.shallow(n, 1)
    cfg = SimConfig(spec=spec, gains=Gains(sigma_e, sigma_s, 0.0, 1.0),
                    plant=plant, x0=x0, reference=refspec, dt=dt,
                    horizon=horizon, init_low=0.0, init_high=0.0,
                    snapshot_period=0.0, frozen_weights=True)
    try:
        run_episode(cfg, 0)
    except DivergenceError:
        return False
    return True


def first_bounded_plant_seed(n, a_high, start=0, max_tries=1000, **kw):
    """Smallest seed >= ``start`` whose sampled plant passes :func:`feedback_only_bounded`."""
    for seed in range(start, start + max_tries):
        plant, x0, ref = sample_plant(np.random.default_rng(seed), n, a_high)
        if feedback_only_bounded(plant, x0, ref, **kw):
            return seed
    raise RuntimeError(f"no bounded plant among seeds {start}..{start + max_tries - 1}")


def save_plant_csv(path, plant, x0, refspec):
    """Rows: A row-major (one row per state), then x0, then omega."""
    if plant.is_realizable:
        raise ValueError("only feature-based plants can be serialized")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in plant.A:
            w.writerow([repr(float(v)) for v in row])
        w.writerow([repr(float(v)) for v in x0])
        w.writerow([repr(float(v)) for v in refspec.omega])


def load_plant_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
    if len(rows) < 3:
        raise ValueError(f"{path}: expected n rows of A plus x0 and omega")
    A = np.array(rows[:-2])
    x0 = np.array(rows[-2])
    omega = np.array(rows[-1])
    n = A.shape[0]
    if A.shape != (n, 6 * n) or x0.shape != (n,) or omega.shape != (n,):
        raise ValueError(f"{path}: inconsistent plant dimensions")
    return PlantModel(A=A), x0, ReferenceSpec(omega)
