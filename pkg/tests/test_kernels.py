import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from polyriesz.errors import KernelCapabilityError, KernelSpecError
from polyriesz.kernels import (
    CHAR,
    HEAT,
    Kernel,
    heat_truncation_bound,
    kernel_grad_x,
    kernel_grad_y,
    kernel_hess_xy,
    kernel_hess_yx,
    kernel_value,
    parse_kernel_spec,
)

DIFFERENTIABLE = [
    Kernel.power(2),
    Kernel.power(6),
    Kernel.power(3.5),
    Kernel.truncated_heat(12, 1.0),
    Kernel.gaussian(0.7),
]


class TestSpecs:
    @pytest.mark.parametrize("text, variant", [
        ("power:k=6", "power"),
        ("heat:Q=12,t=1", HEAT),
        ("gauss:t=0.5", "gauss"),
        ("char:r=0.5", CHAR),
        (" heat : t=2, Q=3 ", HEAT),
    ])
    def test_parse(self, text, variant):
        assert parse_kernel_spec(text).variant == variant

    def test_spec_round_trip(self):
        for K in DIFFERENTIABLE + [Kernel.characteristic(0.25)]:
            assert parse_kernel_spec(K.spec()) == K

    @pytest.mark.parametrize("text", [
        "", "power", "power:k", "power:q=2", "warp:k=2", "power:k=abc", "heat:Q=12",
        "power:k=-1", "char:r=0",
    ])
    def test_malformed(self, text):
        with pytest.raises(KernelSpecError):
            parse_kernel_spec(text)

    def test_invalid_construction(self):
        with pytest.raises(ValueError):
            Kernel.truncated_heat(-1, 1.0)
        with pytest.raises(ValueError):
            Kernel("nope")


class TestValues:
    def test_power(self):
        assert kernel_value(Kernel.power(2), [3.0, 4.0], [0.0, 0.0]) == pytest.approx(25.0)
        assert kernel_value(Kernel.power(3), [3.0, 4.0], [0.0, 0.0]) == pytest.approx(125.0)

    def test_truncated_heat_approaches_exponential(self):
        K = Kernel.truncated_heat(20, 1.0)
        d = np.array([[0.3, 0.4], [1.0, 0.0]])
        assert_allclose(K.value(d), np.exp(-(d ** 2).sum(axis=1)), rtol=1e-14)

    def test_heat_q0_is_constant(self):
        assert Kernel.truncated_heat(0, 1.0).value([5.0, 5.0]) == 1.0

    def test_characteristic_is_open_ball(self):
        K = Kernel.characteristic(1.0)
        assert K.value([0.5, 0.0]) == 1.0
        assert K.value([1.0, 0.0]) == 0.0
        assert K.value([2.0, 0.0]) == 0.0

    def test_symmetry(self):
        K = Kernel.truncated_heat(6, 2.0)
        x, y = np.array([0.2, -0.4]), np.array([1.1, 0.3])
        assert kernel_value(K, x, y) == kernel_value(K, y, x)


class TestDerivatives:
    @pytest.mark.parametrize("K", DIFFERENTIABLE, ids=lambda K: K.spec())
    def test_gradient_matches_finite_differences(self, K):
        d = np.array([0.4, -0.7])
        h = 1e-6
        fd = np.array([(K.value(d + h * e) - K.value(d - h * e)) / (2 * h) for e in np.eye(2)])
        assert_allclose(K.grad(d), fd, rtol=1e-7, atol=1e-9)

    @pytest.mark.parametrize("K", DIFFERENTIABLE, ids=lambda K: K.spec())
    def test_hessian_matches_finite_differences(self, K):
        d = np.array([0.4, -0.7])
        h = 1e-5
        fd = np.column_stack([(K.grad(d + h * e) - K.grad(d - h * e)) / (2 * h) for e in np.eye(2)])
        assert_allclose(K.hess(d), fd, rtol=1e-6, atol=1e-8)

    def test_x_y_relations(self):
        K = Kernel.power(4)
        x, y = np.array([0.3, 0.1]), np.array([-0.2, 0.9])
        assert_allclose(kernel_grad_x(K, x, y), -kernel_grad_y(K, x, y))
        assert_allclose(kernel_hess_xy(K, x, y), kernel_hess_yx(K, x, y).T)

    def test_batched_shapes(self):
        d = np.zeros((3, 5, 2)) + 0.1
        K = Kernel.gaussian(1.0)
        assert K.value(d).shape == (3, 5)
        assert K.grad(d).shape == (3, 5, 2)
        assert K.hess(d).shape == (3, 5, 2, 2)

    def test_odd_power_vanishes_on_diagonal(self):
        K = Kernel.power(3)
        assert_allclose(K.grad(np.zeros(2)), 0.0)
        assert_allclose(K.hess(np.zeros(2)), 0.0)

    def test_characteristic_not_differentiable(self):
        K = Kernel.characteristic(0.5)
        assert not K.has_gradient and not K.has_hessian
        with pytest.raises(KernelCapabilityError, match="kernel not differentiable"):
            K.grad([0.1, 0.1])
        with pytest.raises(KernelCapabilityError):
            K.hess([0.1, 0.1])

    def test_low_powers_not_differentiable(self):
        assert not Kernel.power(1).has_gradient
        assert Kernel.power(2).has_gradient


class TestCapabilities:
    def test_polynomial_degrees(self):
        assert Kernel.power(6).polynomial_degree == 6
        assert Kernel.truncated_heat(12, 1.0).polynomial_degree == 24
        assert Kernel.power(3).polynomial_degree is None
        assert Kernel.power(6).default_degree() == 8
        assert Kernel.truncated_heat(15, 1.0).default_degree() == 30

    def test_integrable(self):
        assert Kernel.gaussian(2.0).l1_norm() == pytest.approx(2.0 * math.pi)
        assert Kernel.characteristic(0.5).l1_norm() == pytest.approx(0.25 * math.pi)
        with pytest.raises(ValueError):
            Kernel.power(2).l1_norm()

    def test_to_dict(self):
        out = Kernel.truncated_heat(12, 1.0).to_dict()
        assert out["spec"] == "heat:Q=12,t=1"
        assert out["has_hessian"] is True

    def test_truncation_bound(self):
        # |d| <= 1, t = 10: the first omitted term bounds the remainder
        Q, t = 4, 10.0
        K = Kernel.truncated_heat(Q, t)
        s = np.linspace(0.0, 1.0, 11)
        err = np.abs(np.exp(-s / t) - K.profile(s))
        assert err.max() <= heat_truncation_bound(Q, t, 1.0)
