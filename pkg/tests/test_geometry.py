import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergmanlab import quadrature as quad
from bergmanlab.geometry import (CarlesonSquare, InvalidAnchorError, InvalidParameterError, PseudoDisc,
                                 StolzRegion, carleson_square, contains, disc_automorphism,
                                 dyadic_family, k_top, pseudo_distance, squares_containing)

moduli = st.floats(0.0, 0.98)
angles = st.floats(-math.pi, math.pi)


@st.composite
def disc_points(draw):
    return draw(moduli) * complex(math.cos(t := draw(angles)), math.sin(t))


@st.composite
def anchors(draw):
    r = draw(st.floats(0.01, 0.99))
    t = draw(angles)
    return r * complex(math.cos(t), math.sin(t))


class TestPseudoDistance:
    def test_examples(self):
        z = 0.3 + 0.4j
        assert pseudo_distance(z, z) == 0.0
        assert pseudo_distance(0, z) == pytest.approx(abs(z), abs=1e-15)
        assert pseudo_distance(0.5, -0.5) == pytest.approx(0.8, abs=1e-15)

    @given(disc_points(), disc_points())
    def test_symmetric(self, z1, z2):
        assert pseudo_distance(z1, z2) == pytest.approx(pseudo_distance(z2, z1), rel=1e-14, abs=1e-15)

    @settings(max_examples=200)
    @given(disc_points(), disc_points(), disc_points())
    def test_mobius_invariant(self, a, z1, z2):
        d0 = pseudo_distance(z1, z2)
        d1 = pseudo_distance(disc_automorphism(a, z1), disc_automorphism(a, z2))
        assert abs(d1 - d0) <= 1e-12


class TestSquares:
    def test_anchor_examples(self):
        s = carleson_square(0.5)
        assert (s.anchor_modulus, s.anchor_argument, s.half_width) == (0.5, 0.0, 0.25)
        s = carleson_square(0.9j)
        assert s.anchor_argument == pytest.approx(math.pi / 2)
        assert s.half_width == pytest.approx(0.05)

    @pytest.mark.parametrize("a", [0, 1, 1.2, -1j])
    def test_invalid_anchor(self, a):
        with pytest.raises(InvalidAnchorError):
            carleson_square(a)

    def test_k_top_examples(self):
        assert k_top(carleson_square(0.5), 2).r_hi == pytest.approx(0.75)
        assert k_top(carleson_square(0.9), 10).r_hi == pytest.approx(0.99)
        with pytest.raises(InvalidParameterError):
            k_top(carleson_square(0.5), 1)

    def test_contains_examples(self):
        s = carleson_square(0.5)
        assert contains(s, 0.7)
        assert not contains(s, 0.3)
        assert contains(StolzRegion(1.0), 0.99)

    def test_containing_examples(self):
        fam = dyadic_family(6)
        found = squares_containing(0.5, fam)
        assert CarlesonSquare(0.5, 0.0) in found
        assert squares_containing(0j, fam) == []
        assert CarlesonSquare(0.5, 0.0) in squares_containing(0.7, fam)

    @settings(max_examples=50)
    @given(anchors(), st.floats(1.01, 50.0))
    def test_k_top_nested(self, a, K):
        s = carleson_square(a)
        top = k_top(s, K)
        rng = np.random.default_rng(0)
        z = np.sqrt(rng.uniform(0, 1, 2000)) * np.exp(1j * rng.uniform(-np.pi, np.pi, 2000))
        z = np.concatenate([z, abs(a) + (1 - abs(a)) * rng.uniform(0, 1, 500) * np.exp(1j * np.angle(a))])
        assert not np.any(top.contains(z) & ~s.contains(z))


def _grid():
    r = np.linspace(0.0, 0.999, 100)
    t = np.linspace(-math.pi, math.pi, 100, endpoint=False)
    rr, tt = np.meshgrid(r, t)
    return (rr * np.exp(1j * tt)).ravel()


@pytest.mark.parametrize("a", [0.5, 0.9j, -0.75 + 0.1j, 0.97 * np.exp(3.1j)])
def test_contains_matches_brute_force(a):
    z = _grid()
    assert z.size == 10_000
    s = carleson_square(a)
    r, t = abs(complex(a)), math.atan2(complex(a).imag, complex(a).real)
    ar = np.abs(z)
    dt = np.array([min(abs(x - t) % (2 * math.pi), 2 * math.pi - abs(x - t) % (2 * math.pi))
                   for x in np.angle(z)])
    np.testing.assert_array_equal(s.contains(z), (ar >= r) & (dt <= (1 - r) / 2))
    top = k_top(s, 3.0)
    np.testing.assert_array_equal(top.contains(z), (ar >= r) & (ar < 1 - (1 - r) / 3) & (dt <= (1 - r) / 2))
    d = PseudoDisc(complex(a) * 0.5, 0.4)
    rho = np.abs((z - d.center) / (1 - np.conj(d.center) * z))
    np.testing.assert_array_equal(d.contains(z), rho < 0.4)
    g = StolzRegion(1.0)
    np.testing.assert_array_equal(g.contains(z), np.abs(np.angle(z)) < (1 - ar) / 2)


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9, 0.99, 0.999])
def test_square_area_quadrature(r):
    a = r * np.exp(0.7j)
    exact = (1 - r) * (1 - r * r) / (2 * math.pi)
    res = quad.integrate(carleson_square(a), lambda z: np.ones(np.shape(z)))
    assert res.converged
    assert abs(res.value - exact) <= 1e-8 * exact
    assert carleson_square(a).area == pytest.approx(exact, rel=1e-14)


def test_pseudo_disc_area():
    d = PseudoDisc(0.6 + 0.2j, 0.5)
    res = quad.integrate(d, lambda z: np.ones(np.shape(z)))
    assert res.value == pytest.approx(d.area, rel=1e-8)
