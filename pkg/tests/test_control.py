import numpy as np
import pytest

from resnet_ac import Gains, control_input, lyapunov_value, sgn, tracking_error
from resnet_ac.control import adaptation_rate_emod, adaptation_rate_sliding


def test_sign_of_zero_is_zero():
    assert sgn([-2.0, 0.0, 3.0]).tolist() == [-1.0, 0.0, 1.0]


def test_control_hand_value():
    u = control_input([1.0, -1.0, 0.0], np.zeros(3), np.zeros(3), Gains(2.0, 2.0))
    assert u.tolist() == [-4.0, 4.0, 0.0]


def test_control_feedforward_terms():
    g = Gains(3.0, 0.5)
    e = np.array([0.2, -0.1])
    u = control_input(e, [1.0, 2.0], [0.3, -0.4], g)
    assert np.allclose(u, [1.0 - 0.3 - 0.6 - 0.5, 2.0 + 0.4 + 0.3 + 0.5])


def test_boundary_layer_saturates():
    g = Gains(1.0, 2.0)
    u = control_input([0.05, 1.0], np.zeros(2), np.zeros(2), g, boundary_layer=0.1)
    assert np.allclose(u, [-0.05 - 1.0, -1.0 - 2.0])


def test_control_rejects_nan():
    with pytest.raises(ValueError):
        control_input([np.nan], [0.0], [0.0], Gains())


def test_tracking_error_shape_check():
    assert tracking_error([1.0, 2.0], [0.5, 0.5]).tolist() == [0.5, 1.5]
    with pytest.raises(ValueError):
        tracking_error([1.0], [1.0, 2.0])


@pytest.mark.parametrize("kw", [dict(sigma_e=0), dict(gamma=0), dict(sigma_s=-1),
                                dict(sigma_theta=-0.1)])
def test_gain_validation(kw):
    with pytest.raises(ValueError):
        Gains(**kw)


def test_adaptation_laws():
    jac = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]])
    e = np.array([0.5, -2.0])
    g = Gains(gamma=2.0, sigma_theta=0.5)
    assert np.allclose(adaptation_rate_sliding(e, jac, g), 2.0 * jac.T @ e)
    theta = np.array([1.0, -1.0, 0.0])
    leak = 0.5 * np.linalg.norm(e) * theta
    assert np.allclose(adaptation_rate_emod(e, theta, jac, g), 2.0 * jac.T @ e - leak)


def test_lyapunov_value():
    assert lyapunov_value([3.0, 4.0], [1.0, 1.0], Gains(gamma=2.0)) == pytest.approx(12.5 + 0.5)
