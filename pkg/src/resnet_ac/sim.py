"""Closed-loop simulation of the plant, controller and weight adaptation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .control import Gains
from .plant import PlantModel, ReferenceSpec
from .resnet import ResNetSpec, WeightVector, init_weights

LAWS = {"sliding": kernels.LAW_SLIDING, "emod": kernels.LAW_EMOD}
INTEGRATORS = {"euler": kernels.METHOD_EULER, "rk4": kernels.METHOD_RK4}


class DivergenceError(RuntimeError):
    """State or weights blew up; usually a gain or step-size problem."""

    def __init__(self, t, x_norm, seed=None):
        self.t = t
        self.x_norm = x_norm
        self.seed = seed
        msg = f"closed loop diverged at t={t:.4f}s (|x|={x_norm:.3g})"
        if seed is not None:
            msg += f", weight seed {seed}"
        super().__init__(msg)


@dataclass(frozen=True, eq=False)
class SimConfig:
    spec: ResNetSpec
    gains: Gains
    plant: PlantModel
    x0: np.ndarray
    reference: ReferenceSpec
    law: str = "sliding"
    dt: float = 1e-3
    horizon: float = 10.0
    integrator: str = "euler"
    boundary_layer: float = 0.0
    decimation: int = 1
    snapshot_period: float = 0.1
    init_low: float = -0.05
    init_high: float = 0.05
    frozen_weights: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least one step")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")
        if self.law not in LAWS:
            raise ValueError(f"law must be one of {sorted(LAWS)}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {sorted(INTEGRATORS)}")
        if self.plant.n != self.spec.n:
            raise ValueError("plant and network dimensions differ")
        object.__setattr__(self, "x0", np.ascontiguousarray(self.x0, dtype=float))

    @property
    def num_steps(self):
        return int(round(self.horizon / self.dt))

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class TrajectoryLog:
    t: np.ndarray
    x: np.ndarray
    xd: np.ndarray
    u: np.ndarray
    f: np.ndarray
    phihat: np.ndarray
    snapshot_t: np.ndarray
    snapshots: np.ndarray
    final_theta: np.ndarray
    horizon: float
    lyapunov: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def e(self):
        return self.x - self.xd

    @property
    def f_err(self):
        return self.f - self.phihat


def _plant_args(plant, n):
    if plant.is_realizable:
        spec = plant.spec
        return (kernels.PLANT_NETWORK, np.zeros((n, 6 * n)), spec.shortcut,
                spec.layout(), spec.buffers(with_jacobian=False),
                plant.theta_star.values)
    dummy = ResNetSpec.shallow(n, 1)
    return (kernels.PLANT_FEATURES, plant.A, False, dummy.layout(),
            dummy.buffers(with_jacobian=False), np.zeros(dummy.total_weight_count))


def _gain_vector(config):
    g = config.gains
    if config.frozen_weights:
        return np.array([g.sigma_e, g.sigma_s, 0.0, 0.0, config.boundary_layer])
    return np.array([g.sigma_e, g.sigma_s, g.sigma_theta, g.gamma, config.boundary_layer])


def _lyap_ref(config):
    p = config.plant
    if p.is_realizable and p.spec == config.spec:
        return p.theta_star.values
    return np.zeros(0)


def step(x, theta, t, config):
    """Advance (x, theta) by one step of ``config.dt``. Returns new copies."""
    n = config.spec.n
    th = np.array(theta, dtype=float)
    one = np.zeros((1, n))
    out_x = np.zeros(n)
    status, _ = kernels.integrate(
        th, np.ascontiguousarray(x, dtype=float), float(t), config.dt, 1,
        INTEGRATORS[config.integrator], 1, 0, config.reference.omega,
        _gain_vector(config), LAWS[config.law], config.spec.shortcut,
        config.spec.layout(), config.spec.buffers(),
        *_plant_args(config.plant, n), _lyap_ref(config),
        np.zeros(1), one.copy(), one.copy(), one.copy(), one.copy(), one.copy(),
        np.zeros(1), np.zeros((0, th.size)), out_x)
    if status != kernels.STATUS_OK or not np.all(np.isfinite(out_x)):
        raise DivergenceError(float(t), float(np.linalg.norm(out_x)))
    return out_x, th


def run_episode(config, weight_seed, theta0=None):
    """Initialize weights from ``weight_seed`` and integrate over the horizon."""
    spec = config.spec
    n = spec.n
    if theta0 is None:
        rng = np.random.default_rng(weight_seed)
        if config.init_high > config.init_low:
            theta0 = init_weights(spec, rng, config.init_low, config.init_high)
        else:
            theta0 = WeightVector.zeros(spec)
    theta = np.array(theta0.values if isinstance(theta0, WeightVector) else theta0,
                     dtype=float)
    nsteps = config.num_steps
    nlog = (nsteps + config.decimation - 1) // config.decimation
    snap_every = int(round(config.snapshot_period / config.dt)) if config.snapshot_period > 0 else 0
    nsnap = (nsteps + snap_every - 1) // snap_every if snap_every else 0

    log_t = np.zeros(nlog)
    arrs = [np.zeros((nlog, n)) for _ in range(5)]
    log_v = np.full(nlog, np.nan)
    snaps = np.zeros((nsnap, theta.size))
    x_end = np.zeros(n)
    status, k = kernels.integrate(
        theta, config.x0, 0.0, config.dt, nsteps, INTEGRATORS[config.integrator],
        config.decimation, snap_every, config.reference.omega,
        _gain_vector(config), LAWS[config.law], spec.shortcut, spec.layout(),
        spec.buffers(), *_plant_args(config.plant, n), _lyap_ref(config),
        log_t, *arrs, log_v, snaps, x_end)
    if status != kernels.STATUS_OK:
        raise DivergenceError(k * config.dt, float(np.linalg.norm(x_end)), weight_seed)
    lyap = log_v if _lyap_ref(config).size else None
    return TrajectoryLog(
        t=log_t, x=arrs[0], xd=arrs[1], u=arrs[2], f=arrs[3], phihat=arrs[4],
        snapshot_t=np.arange(nsnap) * snap_every * config.dt, snapshots=snaps,
        final_theta=theta, horizon=config.horizon, lyapunov=lyap,
        meta={"weight_seed": weight_seed, "x_final": x_end},
    )


def metrics(log, Q=1.0, R=0.01, window=0.2):
    """RMS norms, quadratic cost and ultimate bound of a trajectory.

    ``Q``/``R`` may be scalars (times identity) or matrices. The ultimate
    bound is the largest |e| over the last ``window`` fraction of the horizon.
    """
    e, u, fe = log.e, log.u, log.f_err
    if len(log.t) == 0:
        raise ValueError("empty trajectory")

    def rms(a):
        return float(np.sqrt(np.mean(np.sum(a * a, axis=1))))

    def quad(a, W):
        W = np.asarray(W, dtype=float)
        if W.ndim == 0:
            return float(W) * np.sum(a * a, axis=1)
        return np.einsum("ti,ij,tj->t", a, W, a)

    integrand = quad(e, Q) + quad(u, R)
    J = float(np.trapezoid(integrand, log.t)) if len(log.t) > 1 else 0.0
    enorm = np.linalg.norm(e, axis=1)
    tail = log.t >= (1.0 - window) * log.horizon
    ub = float(enorm[tail].max()) if tail.any() else float(enorm[-1])
    return {"e_rms": rms(e), "f_rms": rms(fe), "u_rms": rms(u), "J": J,
            "ultimate_bound": ub}
