"""Analytic weight Jacobian of the ResNet and its finite-difference check.

Two analytic routes exist. :func:`resnet_jacobian` with ``method="kron"``
assembles every block term with explicit Kronecker products and chained
matrix products, one block at a time. The default ``method="kernel"`` runs
the fused backward sweep from :mod:`resnet_ac.kernels`, which is what the
simulator uses. With column-major vec, ``d(V^T a)/d vec(V) = I kron a^T``,
so the Kronecker ordering needs no correction.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .resnet import LayoutError, _check_theta, resnet_forward, unvec


def _downstream(block, theta_p, dphi, start):
    """Right-to-left product of ``V_l^T diag(phi'_l)`` for l = start..k."""
    k = block.hidden_layers
    out = np.eye(block.widths[-1])
    off = _offsets(block)
    for l in range(k, start - 1, -1):
        r, c = block.shapes[l]
        v = unvec(theta_p[off[l]:off[l] + r * c], r, c)
        out = out @ v.T @ np.diag(dphi[l])
    return out


def _offsets(block):
    off = [0]
    for r, c in block.shapes:
        off.append(off[-1] + r * c)
    return off


def _check_block(block, theta_p, phi, dphi):
    if theta_p.shape != (block.weight_count,) or len(phi) != len(block.shapes):
        raise LayoutError("block cache does not match block spec")
    for j, (r, _) in enumerate(block.shapes):
        if phi[j].shape != (r,) or dphi[j].shape != (r,):
            raise LayoutError(f"cache entry for layer {j} has the wrong width")


def block_weight_jacobian(block, theta_p, phi, dphi):
    """``d Phi_p / d theta_p`` as ``[Lambda_{p,0} ... Lambda_{p,k}]``.

    ``phi``/``dphi`` are the per-layer cache lists of this block
    (``phi[0]`` is the block input).
    """
    theta_p = np.asarray(theta_p, dtype=float)
    _check_block(block, theta_p, phi, dphi)
    parts = []
    for j, (r, c) in enumerate(block.shapes):
        left = _downstream(block, theta_p, dphi, j + 1)
        parts.append(left @ np.kron(np.eye(c), phi[j][None, :]))
    return np.hstack(parts)


def block_input_jacobian(block, theta_p, phi, dphi):
    """``d Phi_p / d eta_p``: ``(prod_l V_l^T phi'_l) V_0^T``."""
    theta_p = np.asarray(theta_p, dtype=float)
    _check_block(block, theta_p, phi, dphi)
    r, c = block.shapes[0]
    v0 = unvec(theta_p[:r * c], r, c)
    return _downstream(block, theta_p, dphi, 1) @ v0.T


def resnet_jacobian(spec, theta, x, cache=None, method="kernel"):
    """n x W Jacobian of the network output with respect to all weights."""
    values = _check_theta(spec, theta)
    if cache is None:
        _, cache = resnet_forward(spec, values, x)
    elif cache.spec != spec:
        raise LayoutError("cache was produced by a different architecture")
    if method == "kernel":
        jt = np.zeros((spec.total_weight_count, spec.n))
        kernels.jacobian_t(values, spec.shortcut, spec.layout(),
                           cache.phi_flat, cache.dphi_flat, spec.n, jt)
        return np.ascontiguousarray(jt.T)
    if method != "kron":
        raise ValueError(f"unknown method {method!r}")

    n = spec.n
    phis, dphis = cache.phi, cache.dphi
    cols = []
    carry = np.eye(n)
    for p in range(spec.num_blocks - 1, -1, -1):
        block = spec.blocks[p]
        tp = values[spec.block_slice(p)]
        cols.append(carry @ block_weight_jacobian(block, tp, phis[p], dphis[p]))
        xi = block_input_jacobian(block, tp, phis[p], dphis[p])
        carry = carry @ (np.eye(n) + xi) if spec.shortcut else carry @ xi
    return np.hstack(cols[::-1])


def finite_diff_jacobian(spec, theta, x, h=1e-6):
    """Central differences over every weight coordinate. Small nets only."""
    if not h > 0:
        raise ValueError("h must be positive")
    values = _check_theta(spec, theta).copy()
    jac = np.empty((spec.n, values.size))
    for i in range(values.size):
        w = values[i]
        values[i] = w + h
        plus = resnet_forward(spec, values, x)[0]
        values[i] = w - h
        minus = resnet_forward(spec, values, x)[0]
        values[i] = w
        jac[:, i] = (plus - minus) / (2 * h)
    return jac


def max_relative_error(analytic, reference):
    """Largest entrywise deviation, relative to the largest reference entry."""
    scale = max(np.max(np.abs(reference)), 1e-12)
    return float(np.max(np.abs(analytic - reference)) / scale)


def gradient_norm_profile(spec, theta, x):
    """Frobenius norm of each block's column slice of the Jacobian."""
    jac = resnet_jacobian(spec, theta, x)
    return np.array([np.linalg.norm(jac[:, spec.block_slice(p)])
                     for p in range(spec.num_blocks)])


def gradcheck(spec, theta, x, h=1e-6, corrupt=False):
    """Compare analytic and finite-difference Jacobians per (block, layer).

    Returns a list of ``(p, j, rel_err)`` rows, errors relative to the
    largest finite-difference entry. ``corrupt`` swaps the Kronecker factor
    order (the row-major convention) as a negative control.
    """
    fd = finite_diff_jacobian(spec, theta, x, h)
    if corrupt:
        an = _row_major_jacobian(spec, theta, x)
    else:
        an = resnet_jacobian(spec, theta, x)
    scale = max(np.max(np.abs(fd)), 1e-12)
    rows = []
    for (p, j), sl in spec.slices.items():
        err = np.max(np.abs(an[:, sl] - fd[:, sl])) / scale
        rows.append((p, j, float(err)))
    return rows


def _row_major_jacobian(spec, theta, x):
    """The Jacobian one would get by pairing (phi^T kron I) with column-major storage."""
    values = _check_theta(spec, theta)
    _, cache = resnet_forward(spec, values, x)
    jac = resnet_jacobian(spec, values, x, cache)
    out = jac.copy()
    for (p, j), sl in spec.slices.items():
        r, c = spec.blocks[p].shapes[j]
        blk = jac[:, sl].reshape(spec.n, c, r).transpose(0, 2, 1).reshape(spec.n, r * c)
        out[:, sl] = blk
    return out
