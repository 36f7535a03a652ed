import numpy as np
import pytest

from resnet_ac import Gains, PlantModel, ReferenceSpec, ResNetSpec, SimConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_config(n=2, num_blocks=2, width=3, shortcut=True, **kw):
    """Small closed loop for quick tests: random A ~ U(0, 0.05), slow reference."""
    r = np.random.default_rng(7)
    spec = ResNetSpec.uniform(n, num_blocks, 1, width, "tanh", shortcut)
    plant = PlantModel(A=r.uniform(0, 0.05, (n, 6 * n)))
    base = dict(spec=spec, gains=Gains(2.0, 2.0, 0.0, 1.0), plant=plant,
                x0=r.uniform(0, 2, n), reference=ReferenceSpec(r.uniform(0, 5, n)),
                horizon=0.5)
    base.update(kw)
    return SimConfig(**base)
