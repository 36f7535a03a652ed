"""ResNet architecture, weight layout and forward evaluation.

A network is a chain of ``m`` fully-connected blocks. Block ``p`` maps
``eta_p`` to ``V_{p,k}^T phi_k(... V_{p,1}^T phi_1(V_{p,0}^T eta_p))`` and,
with shortcuts on, the next block receives ``eta_p`` plus that output. All
weights are stored in one flat vector, each matrix vec'd column-major.
Bias terms are not used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels

ACTIVATIONS = {
    "tanh": kernels.ACT_TANH,
    "identity": kernels.ACT_IDENTITY,
    "sigmoid": kernels.ACT_SIGMOID,
}


class LayoutError(ValueError):
    """Weight vector, cache or input does not match the architecture."""


class NumericalOverflowError(FloatingPointError):
    """A forward pass produced non-finite values."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


def vec(mat):
    """Column-major vectorization: stacks the columns of ``mat``."""
    return np.asarray(mat, dtype=float).reshape(-1, order="F").copy()


def unvec(v, rows, cols):
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise LayoutError(f"cannot unvec {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F").copy()


@dataclass(frozen=True)
class BlockSpec:
    """One fully-connected block.

    ``widths`` is ``(L_0, ..., L_{k+1})`` and ``activations`` names the
    activation of each of the ``k`` hidden layers.
    """

    widths: tuple[int, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        if len(self.widths) < 3:
            raise ValueError("a block needs at least one hidden layer")
        if any(int(w) <= 0 for w in self.widths):
            raise ValueError(f"layer widths must be positive: {self.widths}")
        if len(self.activations) != len(self.widths) - 2:
            raise ValueError("need one activation per hidden layer")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    @property
    def hidden_layers(self):
        return len(self.widths) - 2

    @property
    def shapes(self):
        return [(self.widths[j], self.widths[j + 1]) for j in range(len(self.widths) - 1)]

    @property
    def weight_count(self):
        return sum(r * c for r, c in self.shapes)


@dataclass(frozen=True)
class ResNetSpec:
    """Static architecture: blocks, widths, activations, shortcut switch."""

    n: int
    blocks: tuple[BlockSpec, ...]
    shortcut: bool = True

    def __post_init__(self):
        if self.n <= 0 or not self.blocks:
            raise ValueError("need n >= 1 and at least one block")
        for p, b in enumerate(self.blocks):
            if b.widths[0] != self.n or b.widths[-1] != self.n:
                raise ValueError(
                    f"block {p}: first and last widths must equal n={self.n}, got {b.widths}"
                )

    @classmethod
    def uniform(cls, n, num_blocks, hidden_layers=1, width=None,
                activation="tanh", shortcut=True):
        """Every block has ``hidden_layers`` hidden layers of ``width`` nodes."""
        width = n if width is None else width
        widths = (n,) + (width,) * hidden_layers + (n,)
        block = BlockSpec(widths, (activation,) * hidden_layers)
        return cls(n, (block,) * num_blocks, shortcut)

    @classmethod
    def shallow(cls, n, hidden, activation="tanh"):
        """``V1^T phi(V0^T x)``: one block, no shortcut."""
        return cls(n, (BlockSpec((n, hidden, n), (activation,)),), shortcut=False)

    def with_shortcut(self, shortcut):
        return ResNetSpec(self.n, self.blocks, bool(shortcut))

    @property
    def num_blocks(self):
        return len(self.blocks)

    @cached_property
    def total_weight_count(self):
        return sum(b.weight_count for b in self.blocks)

    @cached_property
    def slices(self):
        """``{(p, j): slice}`` into the flat weight vector, in storage order."""
        out = {}
        off = 0
        for p, b in enumerate(self.blocks):
            for j, (r, c) in enumerate(b.shapes):
                out[(p, j)] = slice(off, off + r * c)
                off += r * c
        return out

    def block_slice(self, p):
        b = self.blocks[p]
        first = self.slices[(p, 0)]
        last = self.slices[(p, len(b.shapes) - 1)]
        return slice(first.start, last.stop)

    @cached_property
    def _layout(self):
        rows, cols, w_off, node_off, act, blk_start = [], [], [], [], [], [0]
        off = 0
        node = 0
        for b in self.blocks:
            for j, (r, c) in enumerate(b.shapes):
                rows.append(r)
                cols.append(c)
                w_off.append(off)
                node_off.append(node)
                act.append(-1 if j == 0 else ACTIVATIONS[b.activations[j - 1]])
                off += r * c
                node += r
            blk_start.append(len(rows))
        arrs = tuple(np.asarray(a, dtype=np.int64)
                     for a in (rows, cols, w_off, node_off, act, blk_start))
        return arrs, node

    def layout(self):
        return self._layout[0]

    @property
    def node_count(self):
        return self._layout[1]

    def buffers(self, with_jacobian=True):
        """Scratch arrays for the kernels: (pre, phi, dphi, eta[, jt])."""
        nodes = self.node_count
        bufs = (np.zeros(nodes), np.zeros(nodes), np.zeros(nodes),
                np.zeros((self.num_blocks + 1, self.n)))
        if with_jacobian:
            bufs = bufs + (np.zeros((self.total_weight_count, self.n)),)
        return bufs

    def to_config(self):
        return {
            "n": self.n,
            "blocks": [{"widths": list(b.widths), "activations": list(b.activations)}
                       for b in self.blocks],
            "shortcut": self.shortcut,
        }


@dataclass
class WeightVector:
    """Flat weight vector plus the architecture that gives it meaning."""

    spec: ResNetSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != (self.spec.total_weight_count,):
            raise LayoutError(
                f"expected {self.spec.total_weight_count} weights, got {self.values.shape}"
            )

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros(spec.total_weight_count))

    @classmethod
    def from_matrices(cls, spec, mats):
        """Build from ``mats[p][j]``, the ``L_{p,j} x L_{p,j+1}`` matrices."""
        theta = np.zeros(spec.total_weight_count)
        for (p, j), sl in spec.slices.items():
            m = np.asarray(mats[p][j], dtype=float)
            if m.shape != spec.blocks[p].shapes[j]:
                raise LayoutError(f"matrix ({p},{j}) has shape {m.shape}")
            theta[sl] = vec(m)
        return cls(spec, theta)

    def matrix(self, p, j):
        r, c = self.spec.blocks[p].shapes[j]
        return unvec(self.values[self.spec.slices[(p, j)]], r, c)

    def block(self, p):
        return self.values[self.spec.block_slice(p)]

    def copy(self):
        return WeightVector(self.spec, self.values.copy())


@dataclass
class ForwardCache:
    """Intermediates of one forward pass.

    ``pre[p][j]`` is the pre-activation feeding hidden layer j (j >= 1),
    ``phi[p][j]`` the layer input (``phi[p][0]`` is eta_p) and ``dphi[p][j]``
    the diagonal of the activation derivative.
    """

    spec: ResNetSpec
    eta: np.ndarray
    pre_flat: np.ndarray
    phi_flat: np.ndarray
    dphi_flat: np.ndarray
    output: np.ndarray

    def _split(self, flat):
        rows, _, _, node_off, _, blk_start = self.spec.layout()
        out = []
        for p in range(self.spec.num_blocks):
            out.append([flat[node_off[g]:node_off[g] + rows[g]]
                        for g in range(blk_start[p], blk_start[p + 1])])
        return out

    @property
    def phi(self):
        return self._split(self.phi_flat)

    @property
    def dphi(self):
        return self._split(self.dphi_flat)

    @property
    def pre(self):
        return self._split(self.pre_flat)


def _check_theta(spec, theta):
    if isinstance(theta, WeightVector):
        if theta.spec != spec:
            raise LayoutError("weight vector belongs to a different architecture")
        return theta.values
    theta = np.ascontiguousarray(theta, dtype=float)
    if theta.shape != (spec.total_weight_count,):
        raise LayoutError(
            f"expected {spec.total_weight_count} weights, got shape {theta.shape}"
        )
    return theta


def block_forward(block, theta_p, eta_p):
    """Evaluate one block without the shortcut.

    Returns ``(output, phi, dphi, pre)`` with per-layer lists as in
    :class:`ForwardCache`.
    """
    eta_p = np.asarray(eta_p, dtype=float)
    theta_p = np.asarray(theta_p, dtype=float)
    if eta_p.shape != (block.widths[0],):
        raise LayoutError(f"block input has shape {eta_p.shape}, expected ({block.widths[0]},)")
    if theta_p.shape != (block.weight_count,):
        raise LayoutError(f"block weights have shape {theta_p.shape}, expected ({block.weight_count},)")
    phi, dphi, pre = [eta_p.copy()], [np.ones_like(eta_p)], [eta_p.copy()]
    off = 0
    z = eta_p
    for j, (r, c) in enumerate(block.shapes):
        if j > 0:
            code = ACTIVATIONS[block.activations[j - 1]]
            a, da = np.empty(r), np.empty(r)
            kernels.activate(code, z, a, da)
            pre.append(z)
            phi.append(a)
            dphi.append(da)
        v = unvec(theta_p[off:off + r * c], r, c)
        z = v.T @ phi[j]
        off += r * c
    return z, phi, dphi, pre


def resnet_forward(spec, theta, x):
    """Network output at ``x`` and the :class:`ForwardCache` behind it."""
    values = _check_theta(spec, theta)
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise LayoutError(f"input has shape {x.shape}, expected ({spec.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("network input contains non-finite values")
    pre, phi, dphi, eta = spec.buffers(with_jacobian=False)
    out = kernels.forward(values, x, spec.shortcut, spec.layout(), pre, phi, dphi, eta)
    if not np.all(np.isfinite(out)):
        bad = int(np.argmin(np.all(np.isfinite(eta), axis=1))) - 1
        raise NumericalOverflowError(f"non-finite output from block {bad}", block=bad)
    return out, ForwardCache(spec, eta, pre, phi, dphi, out)


def init_weights(spec, rng, low=-0.05, high=0.05):
    """I.i.d. uniform weights on ``[low, high)``."""
    if not low < high:
        raise ValueError("init_weights needs low < high")
    return WeightVector(spec, rng.uniform(low, high, spec.total_weight_count))
