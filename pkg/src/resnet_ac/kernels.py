"""Hot numeric kernels: forward pass, weight Jacobian, closed-loop integration.

The forward pass and the Jacobian come in two flavours: explicit loops
(``_loop_*``, compiled by numba) and vectorized numpy (``_np_*``). The
``RESNET_AC_NUMBA`` flag in ``_accel`` picks one; everything else runs
unchanged as plain numpy or compiled. Networks are passed as a
``layout`` tuple of int64 arrays produced by ``ResNetSpec.layout()``:

    (rows, cols, w_off, node_off, act, blk_start)

``rows[g]``/``cols[g]`` are the shape of weight matrix ``g`` (the j-th layer
of some block), ``w_off[g]`` its offset in the flat weight vector,
``node_off[g]`` the offset of its input vector in the activation buffers,
``act[g]`` the activation applied to produce that input (unused for the
first layer of a block) and ``blk_start[p]`` the first layer of block ``p``.

Weight matrices use column-major vec, so the slice for a ``rows x cols``
matrix ``V`` reshaped C-order to ``(cols, rows)`` is exactly ``V.T``.
"""

import numpy as np

from ._accel import USE_NUMBA, kernel

ACT_TANH = 0
ACT_IDENTITY = 1
ACT_SIGMOID = 2

LAW_SLIDING = 0
LAW_EMOD = 1

METHOD_EULER = 0
METHOD_RK4 = 1

PLANT_FEATURES = 0
PLANT_NETWORK = 1

STATUS_OK = 0
STATUS_DIVERGED = 1

DIVERGENCE_LIMIT = 1e8


@kernel
def activate(code, z, out, dout):
    if code == ACT_TANH:
        t = np.tanh(z)
        out[:] = t
        dout[:] = 1.0 - t * t
    elif code == ACT_SIGMOID:
        s = 1.0 / (1.0 + np.exp(-z))
        out[:] = s
        dout[:] = s * (1.0 - s)
    else:
        out[:] = z
        dout[:] = 1.0


def _np_forward(theta, x, shortcut, layout, pre, phi, dphi, eta):
    rows, cols, w_off, node_off, act, blk_start = layout
    m = blk_start.shape[0] - 1
    eta[0, :] = x
    for p in range(m):
        g0 = blk_start[p]
        z = eta[p].copy()
        for g in range(g0, blk_start[p + 1]):
            r = rows[g]
            c = cols[g]
            a = node_off[g]
            pre[a:a + r] = z
            if g == g0:
                phi[a:a + r] = z
                dphi[a:a + r] = 1.0
            else:
                activate(act[g], z, phi[a:a + r], dphi[a:a + r])
            vt = theta[w_off[g]:w_off[g] + r * c].reshape((c, r))
            z = vt @ phi[a:a + r]
        if shortcut:
            eta[p + 1, :] = eta[p] + z
        else:
            eta[p + 1, :] = z
    return eta[m].copy()


def _np_jacobian_t(theta, shortcut, layout, phi, dphi, n, jt):
    rows, cols, w_off, node_off, act, blk_start = layout
    m = blk_start.shape[0] - 1
    carry = np.eye(n)
    for p in range(m - 1, -1, -1):
        g0 = blk_start[p]
        d = carry
        for g in range(blk_start[p + 1] - 1, g0 - 1, -1):
            r = rows[g]
            c = cols[g]
            a = node_off[g]
            # d (I_c kron phi^T) == kron(d, phi^T), transposed into jt
            jt[w_off[g]:w_off[g] + r * c] = np.kron(d, phi[a:a + r]).T
            d = d @ theta[w_off[g]:w_off[g] + r * c].reshape((c, r))
            if g > g0:
                d = d * dphi[a:a + r]
        carry = carry + d if shortcut else d


def _loop_activate(code, z, out, dout):
    for i in range(z.shape[0]):
        if code == ACT_TANH:
            t = np.tanh(z[i])
            out[i] = t
            dout[i] = 1.0 - t * t
        elif code == ACT_SIGMOID:
            s = 1.0 / (1.0 + np.exp(-z[i]))
            out[i] = s
            dout[i] = s * (1.0 - s)
        else:
            out[i] = z[i]
            dout[i] = 1.0


def _loop_forward(theta, x, shortcut, layout, pre, phi, dphi, eta):
    rows, cols, w_off, node_off, act, blk_start = layout
    m = blk_start.shape[0] - 1
    n = x.shape[0]
    for i in range(n):
        eta[0, i] = x[i]
    for p in range(m):
        g0 = blk_start[p]
        g1 = blk_start[p + 1]
        a0 = node_off[g0]
        for i in range(n):
            pre[a0 + i] = eta[p, i]
            phi[a0 + i] = eta[p, i]
            dphi[a0 + i] = 1.0
        for g in range(g0, g1):
            r = rows[g]
            c = cols[g]
            a = node_off[g]
            off = w_off[g]
            if g + 1 < g1:
                b = node_off[g + 1]
                for cc in range(c):
                    s = 0.0
                    for k in range(r):
                        s += theta[off + cc * r + k] * phi[a + k]
                    pre[b + cc] = s
                _loop_activate(act[g + 1], pre[b:b + c], phi[b:b + c], dphi[b:b + c])
            else:
                for cc in range(c):
                    s = 0.0
                    for k in range(r):
                        s += theta[off + cc * r + k] * phi[a + k]
                    eta[p + 1, cc] = eta[p, cc] + s if shortcut else s
    return eta[m].copy()


def _loop_jacobian_t(theta, shortcut, layout, phi, dphi, n, jt):
    rows, cols, w_off, node_off, act, blk_start = layout
    m = blk_start.shape[0] - 1
    wmax = max(n, np.max(rows))
    # carried products are kept transposed so inner loops run contiguously
    carry = np.eye(n)
    d = np.empty((wmax, n))
    d2 = np.empty((wmax, n))
    for p in range(m - 1, -1, -1):
        g0 = blk_start[p]
        for k in range(n):
            for i in range(n):
                d[k, i] = carry[k, i]
        for g in range(blk_start[p + 1] - 1, g0 - 1, -1):
            r = rows[g]
            c = cols[g]
            a = node_off[g]
            off = w_off[g]
            for cc in range(c):
                for k in range(r):
                    fk = phi[a + k]
                    row = off + cc * r + k
                    for i in range(n):
                        jt[row, i] = d[cc, i] * fk
            for k in range(r):
                for i in range(n):
                    d2[k, i] = 0.0
            for cc in range(c):
                for k in range(r):
                    w = theta[off + cc * r + k]
                    for i in range(n):
                        d2[k, i] += w * d[cc, i]
            if g > g0:
                for k in range(r):
                    s = dphi[a + k]
                    for i in range(n):
                        d2[k, i] *= s
            d, d2 = d2, d
        if shortcut:
            for k in range(n):
                for i in range(n):
                    carry[k, i] += d[k, i]
        else:
            for k in range(n):
                for i in range(n):
                    carry[k, i] = d[k, i]


if USE_NUMBA:
    _loop_activate = kernel(_loop_activate)
    forward = kernel(_loop_forward)
    jacobian_t = kernel(_loop_jacobian_t)
else:
    forward = _np_forward
    jacobian_t = _np_jacobian_t


@kernel
def features(x):
    n = x.shape[0]
    y = np.empty(6 * n)
    y[0:n] = x
    y[n:2 * n] = np.tanh(x)
    y[2 * n:3 * n] = np.sin(x)
    y[3 * n:4 * n] = 1.0 / np.cosh(x)
    y[4 * n:5 * n] = x * x
    y[5 * n:6 * n] = x * x * x
    return y


@kernel
def _rhs(t, x, theta, omega, gains, law, shortcut, layout, bufs,
         plant_kind, plant_a, plant_shortcut, plant_layout, plant_bufs,
         theta_star):
    """Closed-loop right-hand side at (t, x, theta).

    Returns (xdot, thdot, xd, u, f, phihat). ``gains`` packs
    (sigma_e, sigma_s, sigma_theta, gamma, boundary_layer).
    """
    pre, phi, dphi, eta, jt = bufs
    n = x.shape[0]
    xd = 0.5 + np.sin(omega * t)
    xd_dot = omega * np.cos(omega * t)
    e = x - xd
    phihat = forward(theta, x, shortcut, layout, pre, phi, dphi, eta)
    jacobian_t(theta, shortcut, layout, phi, dphi, n, jt)

    sigma_e = gains[0]
    sigma_s = gains[1]
    sigma_theta = gains[2]
    gamma = gains[3]
    delta = gains[4]
    if delta > 0.0:
        s = np.minimum(np.maximum(e / delta, -1.0), 1.0)
    else:
        s = np.sign(e)
    u = xd_dot - phihat - sigma_e * e - sigma_s * s

    if plant_kind == PLANT_FEATURES:
        f = plant_a @ features(x)
    else:
        ppre, pphi, pdphi, peta = plant_bufs
        f = forward(theta_star, x, plant_shortcut, plant_layout,
                    ppre, pphi, pdphi, peta)

    xdot = f + u
    thdot = gamma * (jt @ e)
    if law == LAW_EMOD:
        thdot = thdot - sigma_theta * np.sqrt(np.dot(e, e)) * theta
    return xdot, thdot, xd, u, f, phihat


@kernel
def integrate(theta, x0, t0, dt, nsteps, method, decim, snap_every,
              omega, gains, law, shortcut, layout, bufs,
              plant_kind, plant_a, plant_shortcut, plant_layout, plant_bufs,
              theta_star, lyap_ref,
              log_t, log_x, log_xd, log_u, log_f, log_phi, log_v, snaps, x_out):
    """Fixed-step integration of the coupled state/weight dynamics.

    ``theta`` is advanced in place. Rows are logged every ``decim`` steps at
    the step's evaluation point; weight snapshots every ``snap_every`` steps.
    ``lyap_ref`` is either empty or the ideal weights in the controller's
    layout, in which case the Lyapunov value is logged.
    The final (or last finite) state is copied into ``x_out``.
    Returns (status, step index reached).
    """
    x = x0.copy()
    gamma = gains[3]
    track_v = lyap_ref.shape[0] == theta.shape[0] and gamma > 0.0
    row = 0
    srow = 0
    for k in range(nsteps):
        t = t0 + k * dt
        xdot, thdot, xd, u, f, phihat = _rhs(
            t, x, theta, omega, gains, law, shortcut, layout, bufs,
            plant_kind, plant_a, plant_shortcut, plant_layout, plant_bufs,
            theta_star)
        if k % decim == 0 and row < log_t.shape[0]:
            log_t[row] = t
            log_x[row] = x
            log_xd[row] = xd
            log_u[row] = u
            log_f[row] = f
            log_phi[row] = phihat
            if track_v:
                e = x - xd
                tt = lyap_ref - theta
                log_v[row] = 0.5 * np.dot(e, e) + 0.5 * np.dot(tt, tt) / gamma
            row += 1
        if snap_every > 0 and k % snap_every == 0 and srow < snaps.shape[0]:
            snaps[srow] = theta
            srow += 1

        if method == METHOD_RK4:
            h2 = 0.5 * dt
            x1 = x.copy()
            th1 = theta.copy()
            k2x, k2t, _a, _b, _c, _d = _rhs(
                t + h2, x1 + h2 * xdot, th1 + h2 * thdot, omega, gains, law,
                shortcut, layout, bufs, plant_kind, plant_a, plant_shortcut,
                plant_layout, plant_bufs, theta_star)
            k3x, k3t, _a, _b, _c, _d = _rhs(
                t + h2, x1 + h2 * k2x, th1 + h2 * k2t, omega, gains, law,
                shortcut, layout, bufs, plant_kind, plant_a, plant_shortcut,
                plant_layout, plant_bufs, theta_star)
            k4x, k4t, _a, _b, _c, _d = _rhs(
                t + dt, x1 + dt * k3x, th1 + dt * k3t, omega, gains, law,
                shortcut, layout, bufs, plant_kind, plant_a, plant_shortcut,
                plant_layout, plant_bufs, theta_star)
            x = x1 + (dt / 6.0) * (xdot + 2.0 * k2x + 2.0 * k3x + k4x)
            theta[:] = th1 + (dt / 6.0) * (thdot + 2.0 * k2t + 2.0 * k3t + k4t)
        else:
            x = x + dt * xdot
            theta += dt * thdot

        x_out[:] = x
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(theta))):
            return STATUS_DIVERGED, k
        if np.max(np.abs(x)) > DIVERGENCE_LIMIT:
            return STATUS_DIVERGED, k
    return STATUS_OK, nsteps
