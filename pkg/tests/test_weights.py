import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from scipy import integrate
from hypothesis import strategies as st

from bergmanlab import quadrature as quad
from bergmanlab.functions import LogKernel, identity, zero
from bergmanlab.geometry import InvalidParameterError, carleson_square, dyadic_family
from bergmanlab.weights import (CapabilityError, InvalidWeightError, beta_shift, constant, exponential,
                                exponential_twist, horizontal_average, radial_power, spiral_w, standard,
                                stolz_indicator, square_mass, tail_integral, tilde_average, user_weight)


def catalog():
    return [constant(), standard(0.0), standard(1.0), radial_power(-0.5), radial_power(2.0),
            exponential(1.0), spiral_w(0.5), spiral_w(0.25), stolz_indicator(),
            user_weight("1 + real(z)", radial=False)]


def d_class_catalog():
    return [constant(), standard(1.0), radial_power(0.5), spiral_w(0.5)]


def _disc_grid(n_r=10, n_t=20, r_max=0.98):
    r = np.linspace(0.05, r_max, n_r)
    t = np.linspace(-math.pi, math.pi, n_t, endpoint=False) + 0.01
    return (r[:, None] * np.exp(1j * t[None, :])).ravel()


class TestTails:
    @pytest.mark.parametrize("r", [0.0, 0.3, 0.9, 0.999])
    def test_constant(self, r):
        assert tail_integral(constant(), r) == pytest.approx(1 - r, rel=1e-14)

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.0])
    @pytest.mark.parametrize("r", [0.0, 0.5, 0.9, 0.99])
    def test_power(self, alpha, r):
        expect = (1 - r) ** (alpha + 1) / (alpha + 1)
        assert tail_integral(radial_power(alpha), r) == pytest.approx(expect, rel=1e-13)

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.0])
    def test_doubling(self, alpha):
        w = radial_power(alpha)
        r = np.linspace(0.0, 0.999, 40)
        ratio = w.tail(r) / w.tail((1 + r) / 2)
        np.testing.assert_allclose(ratio, 2.0 ** (alpha + 1), rtol=1e-12)

    def test_total_mass_at_zero(self):
        w = exponential(1.0)
        expect = quad.integrate_interval(lambda s: np.exp(-1.0 / (1.0 - s)), 0.0, 1.0).value
        assert tail_integral(w, 0.0) == pytest.approx(expect, rel=1e-10)

    def test_tail_needs_radial(self):
        with pytest.raises(CapabilityError):
            tail_integral(spiral_w(0.5), 0.5)


class TestSquareMass:
    def test_constant_example(self):
        assert square_mass(constant(), carleson_square(0.5)) == pytest.approx(0.0596831036594608, rel=1e-12)

    @pytest.mark.parametrize("w", [constant(), standard(1.0), radial_power(-0.5), exponential(0.5)],
                             ids=lambda w: w.label)
    @pytest.mark.parametrize("a", [0.2, 0.7j, -0.95, 0.999 * np.exp(2j)])
    def test_tail_consistency(self, w, a):
        r = abs(a)
        # scipy's algebraic-weight rule absorbs the (1 - s)^a endpoint factor
        if w.d == 0:
            ring, _ = integrate.quad(lambda s: w.coef * (1 + s) ** w.b * 2 * s, r, 1.0,
                                     weight="alg", wvar=(0.0, w.a), epsabs=0, epsrel=1e-13, limit=200)
        else:
            ring, _ = integrate.quad(lambda s: w.profile(s) * 2 * s, r, 1.0, epsabs=0, epsrel=1e-13, limit=200)
        expect = (1 - r) / (2 * math.pi) * ring
        got = square_mass(w, carleson_square(a))
        adaptive = quad.integrate(carleson_square(a), w).value
        assert got == pytest.approx(expect, rel=1e-9)
        assert adaptive == pytest.approx(expect, rel=1e-7)

    @pytest.mark.parametrize("eps", [0.25, 0.5])
    def test_spiral_band(self, eps):
        w = spiral_w(eps)
        a = 1 - 2.0 ** -np.arange(2, 13)
        m = np.array([square_mass(w, carleson_square(x)) for x in a])
        band = m / (1 - a) ** eps
        assert band.max() / band.min() <= 10

    def test_stolz_lower_bound(self):
        w = stolz_indicator()
        fam = dyadic_family(12, per_level=64)
        ratio = w.square_masses(fam) / np.array([carleson_square(a).area for a in fam.anchors])
        assert ratio.min() > 0.1

    def test_spiral_adaptive_vs_closed(self):
        w = spiral_w(0.5)
        s = carleson_square(0.9 * np.exp(0.03j))
        assert quad.integrate(s, w).value == pytest.approx(square_mass(w, s), rel=1e-6)


class TestBetaShift:
    def test_identity(self):
        w = constant()
        assert beta_shift(w, 0.0) is w

    def test_constant_shift(self):
        w = beta_shift(constant(), 1.0)
        assert w.is_radial
        r = np.linspace(0, 0.99, 7)
        np.testing.assert_allclose(w.profile(r), 1 - r, rtol=1e-15)
        np.testing.assert_allclose(w.tail(r), (1 - r) ** 2 / 2, rtol=1e-13)

    def test_nonintegrable(self):
        with pytest.raises(InvalidWeightError):
            beta_shift(radial_power(-0.5), -0.75)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-0.4, 2.0), st.floats(-0.4, 2.0), st.sampled_from(range(4)))
    def test_composition(self, b1, b2, which):
        base = [constant(), standard(1.0), spiral_w(0.5), user_weight("1 + real(z)**2")][which]
        assume(base.boundary_exponent + min(b1, b1 + b2) > -0.95)
        lhs = beta_shift(beta_shift(base, b1), b2)
        rhs = beta_shift(base, b1 + b2)
        z = _disc_grid(5, 8)
        np.testing.assert_allclose(lhs(z), rhs(z), rtol=1e-13)

    def test_radial_flag(self):
        assert beta_shift(standard(0.0), 1.0).is_radial
        assert not beta_shift(spiral_w(0.5), 1.0).is_radial


class TestTilde:
    def test_constant_values(self):
        t = tilde_average(constant())
        assert t(0.5) == pytest.approx(1.5 / (2 * math.pi), rel=1e-12)
        assert t(0.5j) == pytest.approx(t(0.5), rel=1e-14)
        assert t(0.999999) == pytest.approx(1 / math.pi, rel=1e-5)

    def test_rotation_invariance(self):
        t = tilde_average(standard(1.0))
        z = 0.7 * np.exp(1j * np.linspace(0, 6, 9))
        np.testing.assert_allclose(t(z), t(0.7), rtol=1e-12)

    def test_origin_convention(self):
        t = tilde_average(spiral_w(0.5))
        assert np.isfinite(t(0j)) and t(0j) > 0

    @pytest.mark.parametrize("w", catalog(), ids=lambda w: w.label)
    def test_positive(self, w):
        # exp(-1/(1-r)) underflows double precision beyond r ~ 0.998
        z = np.concatenate([_disc_grid(), [0j, 0.99, -0.99j]])
        vals = tilde_average(w)(z)
        assert np.all(np.isfinite(vals)) and np.all(vals > 0)


class TestHorizontal:
    def test_origin(self):
        for r in (0.3, 0.9):
            assert horizontal_average(constant(), r)(0j) == pytest.approx(r * r, rel=1e-12)

    def test_rotation_invariance(self):
        h = horizontal_average(standard(1.0), 0.5)
        z = 0.6 * np.exp(1j * np.linspace(0, 6, 5))
        np.testing.assert_allclose(h(z), h(0.6), rtol=1e-12)

    def test_invalid_radius(self):
        with pytest.raises(InvalidParameterError):
            horizontal_average(constant(), 1.0)

    @pytest.mark.parametrize("w", d_class_catalog(), ids=lambda w: w.label)
    def test_comparable_to_tilde(self, w):
        # 20 arguments on each of the moduli 1 - 2^-n, n = 1..10
        levels = np.arange(1, 11)
        t = np.linspace(-math.pi, math.pi, 20, endpoint=False) + 0.01
        z = ((1 - 2.0 ** -levels)[:, None] * np.exp(1j * t)[None, :])
        assert z.size == 200
        ratio = horizontal_average(w, 0.9)(z.ravel()).reshape(z.shape) / tilde_average(w)(z.ravel()).reshape(z.shape)
        assert np.all(np.isfinite(ratio)) and np.all(ratio > 0)
        # the band is wide at this radius but must settle toward the boundary
        spread = ratio.max(axis=1) / ratio.min(axis=1)
        top = ratio.max(axis=1)
        assert top[-1] / top[-2] < 1.15
        assert spread[-1] / spread[-2] < 1.15


class TestTwist:
    def test_zero_symbol(self):
        w = spiral_w(0.5)
        assert exponential_twist(w, zero(), 2.0, 2.0) is w

    def test_example(self):
        t = exponential_twist(constant(), identity(), 1.0, 2.0)
        assert t(0.5) == pytest.approx(math.e, rel=1e-14)

    def test_large_lambda(self):
        w = standard(1.0)
        t = exponential_twist(w, LogKernel(1.0), 1e6, 2.0)
        z = _disc_grid(8, 8, 0.95)
        np.testing.assert_allclose(t(z) / w(z), 1.0, atol=1e-5)

    def test_zero_lambda(self):
        with pytest.raises(InvalidParameterError):
            exponential_twist(constant(), identity(), 0.0, 2.0)


def test_user_weight_rejects_calls():
    with pytest.raises(Exception):
        user_weight("__import__('os')")
