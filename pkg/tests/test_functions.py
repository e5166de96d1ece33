import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergmanlab.estimates import estimate_from_samples
from bergmanlab.functions import (ExpOf, InversePower, KernelPower, LogKernel, Polynomial, Product, Scale,
                                  Sum, bloch_seminorm, cauchy_derivative, choose_gamma, derivative,
                                  monomial, normalized_test_function)
from bergmanlab.geometry import dyadic_family
from bergmanlab.norms import bergman_norm
from bergmanlab.weights import spiral_w, standard


def family_zoo():
    p = Polynomial([1.0, -2.0, 0.5j, 3.0])
    k = KernelPower(0.6 * cmath.exp(0.4j), 2.5)
    return {
        "polynomial": p,
        "inverse power": InversePower(0.8j, 1.5, 2.0),
        "kernel power": k,
        "log kernel": LogKernel(0.9 * cmath.exp(-1j)),
        "boundary log": LogKernel(1.0),
        "scale": Scale(k, 2 - 1j),
        "sum": Sum([p, k, LogKernel(0.5)]),
        "product": Product(p, k),
        "exp": ExpOf(LogKernel(0.7), 0.5),
        "rotated": k.rotate(1.0) * p.rotate(-0.3),
    }


def sample_points(n=60, r_max=0.95, seed=3):
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.uniform(0, r_max**2, n)) * np.exp(1j * rng.uniform(-np.pi, np.pi, n))


def test_evaluation_examples():
    z = np.array([0.3 + 0.1j, -0.5j])
    np.testing.assert_array_equal(Polynomial([0, 1])(z), z)
    np.testing.assert_allclose(KernelPower(0.0, 3.0)(z), 1.0)
    assert KernelPower(0.5, 2.0)(0) == pytest.approx(0.5625, rel=1e-15)


def test_derivative_examples():
    z = sample_points(10)
    np.testing.assert_allclose(derivative(monomial(2))(z), 2 * z, rtol=1e-15)
    a, e = 0.7 * cmath.exp(2j), 1.7
    closed = e * np.conj(a) * (1 - abs(a) ** 2) ** e / (1 - np.conj(a) * z) ** (e + 1)
    np.testing.assert_allclose(derivative(KernelPower(a, e))(z), closed, rtol=1e-13)
    np.testing.assert_allclose(cauchy_derivative(KernelPower(a, e))(z), closed, rtol=1e-10)
    np.testing.assert_allclose(derivative(LogKernel(1.0))(z), 1 / (1 - z), rtol=1e-14)


@pytest.mark.parametrize("name", list(family_zoo()))
@pytest.mark.parametrize("k", [1, 2, 3])
def test_cauchy_matches_closed_form(name, k):
    f = family_zoo()[name]
    z = sample_points()
    closed = derivative(f, k)(z)
    numeric = cauchy_derivative(f, k)(z)
    scale = np.maximum(np.abs(closed), 1e-300)
    assert np.max(np.abs(numeric - closed) / scale) <= 1e-10


@settings(max_examples=30)
@given(st.integers(0, 9), st.integers(0, 9), st.integers(1, 3), st.complex_numbers(max_magnitude=3))
def test_linearity(i, j, k, c):
    zoo = list(family_zoo().values())
    f, g = zoo[i], zoo[j]
    z = sample_points(20)
    lhs = derivative(f + g * c, k)(z)
    rhs = derivative(f, k)(z) + c * derivative(g, k)(z)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.max(np.abs(rhs)))


@pytest.mark.parametrize("name", list(family_zoo()))
def test_rotation_covariance(name):
    f = family_zoo()[name]
    phi = 0.83
    z = sample_points(20, 0.9)
    np.testing.assert_allclose(f.rotate(phi)(z * cmath.exp(1j * phi)), f(z), rtol=1e-13, atol=1e-13)


class TestBloch:
    def test_identity(self):
        est = bloch_seminorm(monomial(1), 8, 16)
        assert est.value == pytest.approx(1.0)
        assert est.witness_anchor == 0

    def test_log(self):
        est = bloch_seminorm(LogKernel(1.0), 12, 64)
        assert 1.99 < est.value <= 2.0
        assert est.bounded

    def test_constant(self):
        assert bloch_seminorm(Polynomial([4.0]), 6, 8).value == 0.0


@pytest.mark.parametrize("w", [standard(1.0), spiral_w(0.5)], ids=lambda w: w.label)
def test_normalized_test_function_bounded(w):
    p = 2.0
    gamma, eta = choose_gamma(w, p, dyadic_family(8, per_level=4))
    assert gamma / p > eta
    levels = np.arange(1, 10)
    anchors = (1 - 2.0 ** -levels) * cmath.exp(0.3j)
    norms = np.array([bergman_norm(normalized_test_function(a, p, gamma, w), w, p) for a in anchors])
    est = estimate_from_samples(norms, levels, anchors)
    assert np.all(np.isfinite(norms))
    assert est.bounded
