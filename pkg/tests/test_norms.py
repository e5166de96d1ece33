import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gammaln

from bergmanlab.functions import KernelPower, LogKernel, Polynomial, monomial, point_grid
from bergmanlab.norms import (SuiteEntry, bergman_norm, default_suite, lp_functional, lp_ratio_suite,
                              subharmonic_bound_check, tilde_equivalence_suite)
from bergmanlab.quadrature import QuadratureSpec
from bergmanlab.weights import constant, radial_power, spiral_w, standard, stolz_indicator


def monomial_norm_sq(n, alpha):
    return math.exp(gammaln(n + 1) + gammaln(alpha + 2) - gammaln(n + alpha + 2))


class TestBergmanNorm:
    def test_constant_function(self):
        for w in (constant(), standard(1.0), spiral_w(0.5)):
            m = w.total_mass()
            assert bergman_norm(Polynomial([3.0]), w, 1.5) == pytest.approx(3.0 * m ** (1 / 1.5), rel=1e-8)

    def test_examples(self):
        assert bergman_norm(monomial(1), constant(), 2) == pytest.approx(math.sqrt(0.5), rel=1e-10)
        assert bergman_norm(monomial(1), standard(0.0), 2) == pytest.approx(math.sqrt(0.5), rel=1e-10)

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.0])
    def test_monomial_closed_forms(self, alpha):
        w = standard(alpha)
        for n in range(0, 33):
            got = bergman_norm(monomial(n), w, 2.0) ** 2
            assert got == pytest.approx(monomial_norm_sq(n, alpha), rel=1e-5), n

    @settings(max_examples=20, deadline=None)
    @given(st.complex_numbers(min_magnitude=0.01, max_magnitude=5), st.floats(0.6, 0.95),
           st.floats(-math.pi, math.pi), st.sampled_from([1.0, 2.0, 3.0]))
    def test_homogeneity(self, c, r, t, p):
        f = KernelPower(r * cmath.exp(1j * t), 1.5)
        w = spiral_w(0.5)
        assert bergman_norm(f * c, w, p) == pytest.approx(abs(c) * bergman_norm(f, w, p), rel=1e-7)
        assert lp_functional(f * c, w, p, 1) == pytest.approx(abs(c) * lp_functional(f, w, p, 1), rel=1e-7)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.0, 0.97), st.floats(-math.pi, math.pi), st.sampled_from([1.0, 2.0]),
           st.sampled_from([(radial_power(1.0), constant()), (radial_power(2.0), radial_power(1.0)),
                            (stolz_indicator(), constant())]))
    def test_weight_monotonicity(self, r, t, p, pair):
        small, big = pair
        f = KernelPower(r * cmath.exp(1j * t), 2.0) + LogKernel(0.5)
        assert bergman_norm(f, small, p) <= bergman_norm(f, big, p) * (1 + 1e-7)


class TestLPFunctional:
    def test_examples(self):
        assert lp_functional(Polynomial([-2.5]), spiral_w(0.5), 2, 1) == pytest.approx(2.5, rel=1e-12)
        assert lp_functional(monomial(1), constant(), 2, 1) == pytest.approx(math.sqrt(1 / 6), rel=1e-10)
        assert lp_functional(monomial(1), constant(), 2, 2) == pytest.approx(1.0, rel=1e-12)

    def test_monomial_ratios(self):
        report = lp_ratio_suite(standard(0.0), 2, 1, [monomial(n) for n in range(1, 33)])
        ratios = np.array([r["ratio"] for r in report.records])
        n = np.arange(1, 33)
        np.testing.assert_allclose(ratios, (2 * n + 1) / n, rtol=1e-6)
        assert ratios[0] == pytest.approx(3.0, rel=1e-8)

    def test_constants(self):
        report = lp_ratio_suite(spiral_w(0.5), 2, 1, [Polynomial([c]) for c in (1.0, -2.0, 3j)])
        w = spiral_w(0.5)
        for r in report.records:
            assert r["ratio"] == pytest.approx(w.total_mass(), rel=1e-8)
        report = lp_ratio_suite(constant(), 1.5, 2, [Polynomial([c]) for c in (1.0, 4.0)])
        assert report.spread == pytest.approx(1.0, abs=1e-9)

    def test_zero_skipped(self):
        report = lp_ratio_suite(constant(), 2, 1, [Polynomial([0.0]), monomial(1)])
        assert len(report.records) == 1 and len(report.skipped) == 1

    @pytest.mark.parametrize("w", [standard(1.0), radial_power(-0.5)], ids=lambda w: w.label)
    def test_rotation_invariance(self, w):
        base = [KernelPower(0.9, 3.0), LogKernel(0.75), KernelPower(0.5, 1.0) + monomial(3)]
        phi = 2.1
        a = lp_ratio_suite(w, 2, 1, base)
        b = lp_ratio_suite(w, 2, 1, [f.rotate(phi) for f in base])
        np.testing.assert_allclose([r["ratio"] for r in b.records], [r["ratio"] for r in a.records], rtol=1e-7)


class TestTilde:
    def test_constant_weight_monomials(self):
        suite = [monomial(n) for n in range(0, 33)]
        report = tilde_equivalence_suite(constant(), 2, 1, suite)

        def tilde_norm_sq(n):
            # the averaged weight is (1 + r)/(2 pi) for r >= 0.01
            def prof(r):
                return (1 + max(r, 0.01)) / (2 * math.pi)
            return integrate.quad(lambda r: r ** (2 * n) * prof(r) * 2 * r, 0, 1, points=[0.01], epsrel=1e-12)[0]

        got = [r["right"] for r in report.norm_vs_tilde.records]
        np.testing.assert_allclose(got, [tilde_norm_sq(n) for n in range(33)], rtol=1e-7)
        assert np.isfinite(report.norm_vs_tilde.spread)
        assert not report.diverging

    def test_constants(self):
        # the averaged spiral weight has a curved cusp, so a loose tolerance keeps this cheap
        spec = QuadratureSpec(relative_tolerance=1e-4)
        report = tilde_equivalence_suite(spiral_w(0.5), 2, 1, [Polynomial([1.0]), Polynomial([-7.0])], spec=spec)
        r = [x["ratio"] for x in report.norm_vs_tilde.records]
        assert r[0] == pytest.approx(r[1], rel=1e-10)

    @pytest.mark.parametrize("w", [constant(), standard(1.0)], ids=lambda w: w.label)
    def test_refinement(self, w):
        suite = default_suite(7, 2, radial=True)
        report = tilde_equivalence_suite(w, 2, 1, suite)
        for rep in (report.norm_vs_tilde, report.tilde_vs_lp):
            levels, spreads = rep.level_spreads()
            assert np.all(np.isfinite(spreads))
            assert spreads[-1] / spreads[-2] <= 1.05


class TestSubharmonic:
    def test_constant(self):
        assert subharmonic_bound_check(Polynomial([2.0]), 2, 1, 0.5).value == 0.0

    def test_identity_at_origin(self):
        est = subharmonic_bound_check(monomial(1), 2, 1, 0.5, grid=(np.array([0j]), np.array([0])))
        assert est.value == pytest.approx(32.0, rel=1e-8)

    def test_rotation_invariant(self):
        grid = point_grid(4, 8)
        a = subharmonic_bound_check(monomial(3), 2, 1, 0.5, grid=grid).value
        b = subharmonic_bound_check(monomial(3).rotate(0.7), 2, 1, 0.5, grid=grid).value
        assert b == pytest.approx(a, rel=1e-7)

    def test_kernel_bounded(self):
        assert subharmonic_bound_check(KernelPower(0.9, 2.0), 2, 2, 0.5).bounded


@pytest.mark.parametrize("w", [standard(0.0), standard(1.0)], ids=lambda w: w.label)
@pytest.mark.parametrize("p,k", [(1, 1), (2, 2)])
def test_two_and_one_sided_small_suite(w, p, k):
    report = lp_ratio_suite(w, p, k, default_suite(6, p, radial=True))
    assert np.isfinite(report.spread)
    assert not report.diverging
    assert not report.one_sided_diverging


def test_suite_entries():
    suite = default_suite(3, 2)
    assert isinstance(suite[0], SuiteEntry)
    kernels = [e for e in suite if e.label.startswith("kernel")]
    assert len(kernels) == 8 + 8 + 8
    assert {e.level for e in kernels} == {1, 2, 3}
