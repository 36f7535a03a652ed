"""Tracking error, sliding-mode control input and the weight update laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Gains:
    """Controller gains; the adaptation gain matrix is ``gamma * I``."""

    sigma_e: float = 2.0
    sigma_s: float = 2.0
    sigma_theta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.sigma_e > 0:
            raise ValueError("sigma_e must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.sigma_s < 0 or self.sigma_theta < 0:
            raise ValueError("sigma_s and sigma_theta must be nonnegative")


def tracking_error(x, x_d):
    x = np.asarray(x, dtype=float)
    x_d = np.asarray(x_d, dtype=float)
    if x.shape != x_d.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x_d.shape}")
    return x - x_d


def sgn(v):
    """Componentwise sign with ``sgn(0) = 0``."""
    return np.sign(np.asarray(v, dtype=float))


def control_input(e, xd_dot, phihat, gains, boundary_layer=0.0):
    """``u = xd_dot - phihat - sigma_e e - sigma_s sgn(e)``.

    With ``boundary_layer > 0`` the sign is replaced by ``clip(e / delta, -1, 1)``.
    """
    e, xd_dot, phihat = (np.asarray(a, dtype=float) for a in (e, xd_dot, phihat))
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(xd_dot))
            and np.all(np.isfinite(phihat))):
        raise ValueError("control_input received non-finite values")
    if boundary_layer > 0:
        s = np.clip(e / boundary_layer, -1.0, 1.0)
    else:
        s = sgn(e)
    return xd_dot - phihat - gains.sigma_e * e - gains.sigma_s * s


def adaptation_rate_sliding(e, jac, gains):
    """``gamma * J^T e`` with ``J`` the n x W weight Jacobian."""
    return gains.gamma * (np.asarray(jac).T @ np.asarray(e, dtype=float))


def adaptation_rate_emod(e, theta, jac, gains):
    """e-modification: ``-sigma_theta |e| theta + gamma J^T e``."""
    e = np.asarray(e, dtype=float)
    leak = gains.sigma_theta * np.linalg.norm(e) * np.asarray(theta, dtype=float)
    return adaptation_rate_sliding(e, jac, gains) - leak


def lyapunov_value(e, theta_err, gains):
    """``0.5 e.e + 0.5 theta_err.theta_err / gamma``."""
    e = np.asarray(e, dtype=float)
    theta_err = np.asarray(theta_err, dtype=float)
    return 0.5 * float(e @ e) + 0.5 * float(theta_err @ theta_err) / gains.gamma
