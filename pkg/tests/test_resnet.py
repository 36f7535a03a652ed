import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resnet_ac import (BlockSpec, LayoutError, NumericalOverflowError, ResNetSpec,
                       WeightVector, init_weights, resnet_forward, unvec, vec)
from resnet_ac.resnet import block_forward


def test_vec_stacks_columns():
    m = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    assert vec(m).tolist() == [1, 3, 5, 2, 4, 6]
    assert np.array_equal(unvec(vec(m), 3, 2), m)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4),
       st.integers(0, 2**32 - 1))
def test_vec_kron_identity(a, b, c, d, seed):
    r = np.random.default_rng(seed)
    A, B, C = r.normal(size=(a, b)), r.normal(size=(b, c)), r.normal(size=(c, d))
    assert np.allclose(vec(A @ B @ C), np.kron(C.T, A) @ vec(B), atol=1e-12)


def test_unvec_rejects_wrong_size():
    with pytest.raises(LayoutError):
        unvec(np.zeros(5), 2, 3)


def test_weight_counts():
    spec = ResNetSpec.uniform(10, 20, 1, 10)
    assert spec.total_weight_count == 20 * 200
    assert ResNetSpec.shallow(10, 100).total_weight_count == 2000
    assert ResNetSpec.shallow(10, 10).total_weight_count == 200


def test_slices_tile_the_vector():
    spec = ResNetSpec(3, (BlockSpec((3, 4, 2, 3), ("tanh", "sigmoid")),
                          BlockSpec((3, 5, 3), ("identity",))))
    covered = np.zeros(spec.total_weight_count, int)
    for (p, j), sl in spec.slices.items():
        r, c = spec.blocks[p].shapes[j]
        assert sl.stop - sl.start == r * c
        covered[sl] += 1
    assert np.all(covered == 1)


def test_block_spec_validation():
    with pytest.raises(ValueError):
        BlockSpec((3, 3), ())
    with pytest.raises(ValueError):
        BlockSpec((3, 0, 3), ("tanh",))
    with pytest.raises(ValueError):
        BlockSpec((3, 4, 3), ("relu",))
    with pytest.raises(ValueError):
        ResNetSpec(2, (BlockSpec((3, 4, 3), ("tanh",)),))


def test_scalar_shallow_hand_value():
    spec = ResNetSpec.shallow(1, 1)
    a, b, x = 0.7, -1.3, 0.4
    out, _ = resnet_forward(spec, np.array([a, b]), np.array([x]))
    assert out[0] == pytest.approx(b * np.tanh(a * x), abs=1e-15)


def test_shortcut_adds_block_input():
    spec = ResNetSpec(1, (BlockSpec((1, 1, 1), ("tanh",)),) * 2, shortcut=True)
    th = np.array([0.5, 2.0, -0.3, 1.5])
    x = 0.8
    eta1 = x + 2.0 * np.tanh(0.5 * x)
    eta2 = eta1 + 1.5 * np.tanh(-0.3 * eta1)
    out, cache = resnet_forward(spec, th, np.array([x]))
    assert out[0] == pytest.approx(eta2, abs=1e-14)
    assert cache.eta[1][0] == pytest.approx(eta1, abs=1e-14)
    out_fc, _ = resnet_forward(spec.with_shortcut(False), th, np.array([x]))
    assert out_fc[0] == pytest.approx(1.5 * np.tanh(-0.3 * 2.0 * np.tanh(0.5 * x)), abs=1e-14)


def test_forward_matches_matrix_form(rng):
    spec = ResNetSpec(3, (BlockSpec((3, 4, 2, 3), ("tanh", "sigmoid")),
                          BlockSpec((3, 5, 3), ("identity",))))
    w = init_weights(spec, rng, -0.5, 0.5)
    x = rng.normal(size=3)
    acts = {"tanh": np.tanh, "sigmoid": lambda z: 1 / (1 + np.exp(-z)), "identity": lambda z: z}
    eta = x
    for p, blk in enumerate(spec.blocks):
        h = eta
        for j in range(len(blk.shapes)):
            if j > 0:
                h = acts[blk.activations[j - 1]](h)
            h = w.matrix(p, j).T @ h
        eta = eta + h
    out, _ = resnet_forward(spec, w, x)
    assert np.allclose(out, eta, atol=1e-14)


def test_block_forward_agrees_with_network(rng):
    spec = ResNetSpec.uniform(3, 1, 2, 4, shortcut=False)
    w = init_weights(spec, rng, -0.5, 0.5)
    x = rng.normal(size=3)
    out, phi, dphi, _ = block_forward(spec.blocks[0], w.values, x)
    assert np.allclose(out, resnet_forward(spec, w, x)[0], atol=1e-15)
    assert len(phi) == 3 and np.allclose(dphi[1], 1 - phi[1] ** 2)


def test_from_matrices_roundtrip(rng):
    spec = ResNetSpec.uniform(2, 2, 1, 3)
    mats = [[rng.normal(size=s) for s in b.shapes] for b in spec.blocks]
    w = WeightVector.from_matrices(spec, mats)
    assert all(np.array_equal(w.matrix(p, j), mats[p][j]) for p in range(2) for j in range(2))


def test_layout_errors(rng):
    spec = ResNetSpec.uniform(2, 1, 1, 3)
    with pytest.raises(LayoutError):
        resnet_forward(spec, np.zeros(5), np.zeros(2))
    with pytest.raises(LayoutError):
        resnet_forward(spec, np.zeros(spec.total_weight_count), np.zeros(3))
    with pytest.raises(LayoutError):
        resnet_forward(spec, WeightVector.zeros(ResNetSpec.uniform(2, 1, 1, 4)), np.zeros(2))
    with pytest.raises(ValueError):
        resnet_forward(spec, np.zeros(spec.total_weight_count), np.array([np.nan, 0.0]))


def test_overflow_reports_block():
    spec = ResNetSpec.uniform(1, 3, 1, 1, activation="identity", shortcut=False)
    th = np.full(spec.total_weight_count, 1e120)
    with pytest.raises(NumericalOverflowError) as info:
        resnet_forward(spec, th, np.array([1e10]))
    assert info.value.block is not None


def test_init_weights_range_and_determinism():
    spec = ResNetSpec.uniform(10, 20, 1, 10)
    a = init_weights(spec, np.random.default_rng(3)).values
    b = init_weights(spec, np.random.default_rng(3)).values
    assert np.array_equal(a, b)
    assert a.min() >= -0.05 and a.max() < 0.05
    with pytest.raises(ValueError):
        init_weights(spec, np.random.default_rng(0), 0.1, 0.1)


@pytest.mark.parametrize("shortcut", [True, False])
def test_zero_weights(rng, shortcut):
    spec = ResNetSpec.uniform(4, 5, 2, 3, "tanh", shortcut)
    x = rng.normal(size=4) * 10
    out, _ = resnet_forward(spec, WeightVector.zeros(spec), x)
    assert np.array_equal(out, x if shortcut else np.zeros(4))


def test_forward_is_pure(rng):
    spec = ResNetSpec.uniform(10, 20, 1, 10)
    w = init_weights(spec, rng)
    x = rng.normal(size=10)
    a, _ = resnet_forward(spec, w, x)
    b, _ = resnet_forward(spec, w.copy(), x.copy())
    assert a.tobytes() == b.tobytes()
