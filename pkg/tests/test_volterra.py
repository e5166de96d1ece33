import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergmanlab.functions import (KernelPower, LogKernel, Polynomial, derivative, identity, monomial,
                                  zero)
from bergmanlab.geometry import InvalidParameterError, dyadic_family
from bergmanlab.norms import lp_ratio_suite
from bergmanlab.volterra import (FAILS, PLAUSIBLE, apply_tg, resolvent_apply, resolvent_classify,
                                 resolvent_solution, tg_bounded_constant, tg_compact_profile,
                                 tg_qlessp_norm, volterra_index)
from bergmanlab.weights import constant, spiral_w, standard


def probe_points(n=50, r_max=0.9, seed=11):
    rng = np.random.default_rng(seed)
    return np.sqrt(rng.uniform(0, r_max**2, n)) * np.exp(1j * rng.uniform(-np.pi, np.pi, n))


def symbols():
    return [identity(), LogKernel(1.0), KernelPower(0.5j, 1.0), Polynomial([0.3, -1.0, 0.5j]),
            LogKernel(0.8 * cmath.exp(2j))]


def small_suite():
    return ([Polynomial([1.0])] + [monomial(n) for n in (1, 2, 4, 8)]
            + [KernelPower(a, 2.0) for a in (0.5, 0.75, 0.875)] + [LogKernel(0.5)])


class TestApply:
    def test_examples(self):
        z = probe_points(10)
        np.testing.assert_allclose(apply_tg(identity(), Polynomial([1.0]), z), z, rtol=1e-13)
        np.testing.assert_allclose(apply_tg(identity(), monomial(1), z), z**2 / 2, rtol=1e-13)
        np.testing.assert_array_equal(apply_tg(LogKernel(1.0), zero(), z), 0)

    @pytest.mark.parametrize("i", range(5))
    def test_constant_gives_increment(self, i):
        g = symbols()[i]
        z = probe_points()
        got = apply_tg(g, Polynomial([1.0]), z)
        np.testing.assert_allclose(got, g(z) - g(0j), rtol=1e-10, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 4), st.complex_numbers(max_magnitude=5), st.floats(0.1, 0.9))
    def test_linear_in_f(self, i, c, r):
        g = symbols()[i]
        f1, f2 = KernelPower(r, 2.0), monomial(3)
        z = probe_points(20)
        lhs = apply_tg(g, f1 + f2 * c, z)
        rhs = apply_tg(g, f1, z) + c * apply_tg(g, f2, z)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12 * (1 + abs(c)))


class TestCriteria:
    def test_identity_symbol(self):
        est = tg_bounded_constant(identity(), spiral_w(0.5), 2, 2, dyadic_family(10, per_level=8))
        assert est.bounded
        assert est.value == pytest.approx(0.5, rel=1e-12)

    def test_log_symbol_bloch(self):
        est = tg_bounded_constant(LogKernel(1.0), constant(), 2, 2)
        assert est.bounded and est.value <= 2.0

    @pytest.mark.parametrize("w", [constant(), standard(1.0), spiral_w(0.5)], ids=lambda w: w.label)
    @pytest.mark.parametrize("i", range(5))
    def test_p_equals_q_ignores_weight(self, w, i):
        g = symbols()[i]
        fam = dyadic_family(8, per_level=16)
        direct = np.max((1 - fam.moduli) * np.abs(derivative(g)(fam.anchors)))
        assert tg_bounded_constant(g, w, 3, 3, fam).value == pytest.approx(direct, rel=1e-14)

    def test_q_greater_than_p_slope(self):
        p, q = 2.0, 4.0
        fam = dyadic_family(12, per_level=1)
        est = tg_bounded_constant(identity(), constant(), p, q, fam)
        r = fam.moduli
        expect = (1 - r) * ((1 - r) ** 2 * (1 + r) / (2 * math.pi)) ** (1 / q - 1 / p)
        assert est.value == pytest.approx(expect.max(), rel=1e-10)
        slope = np.polyfit(np.log(1 - r[-6:]), np.log(expect[-6:]), 1)[0]
        assert slope == pytest.approx(1 + 2 * (1 / q - 1 / p), abs=0.01)

    def test_requires_p_at_most_q(self):
        with pytest.raises(InvalidParameterError):
            tg_bounded_constant(identity(), constant(), 2, 1)

    def test_compact_profiles(self):
        prof = tg_compact_profile(Polynomial([1.0, 2.0, -1.0]), constant(), 2, 2)
        assert prof.vanishing
        prof = tg_compact_profile(LogKernel(1.0), constant(), 2, 2)
        assert not prof.vanishing
        assert prof.maxima[-1] == pytest.approx(1.0, rel=1e-3)
        prof = tg_compact_profile(Polynomial([4.0]), constant(), 2, 2)
        assert np.all(prof.maxima == 0)

    def test_qlessp(self):
        assert volterra_index(2, 1) == 2.0
        assert math.isfinite(tg_qlessp_norm(Polynomial([2.0]), spiral_w(0.5), 2, 1))
        for p, q in [(2, 1), (4, 1), (3, 2)]:
            assert math.isfinite(tg_qlessp_norm(LogKernel(1.0), constant(), p, q))
        with pytest.raises(InvalidParameterError):
            volterra_index(1, 2)


class TestResolvent:
    def test_constant_h(self):
        z = probe_points(20)
        lam = 0.7 - 0.4j
        g = LogKernel(0.9)
        np.testing.assert_allclose(resolvent_apply(lam, g, Polynomial([1.0]), z), np.exp(g(z) / lam), rtol=1e-12)
        # with g(0) != 0 the solution of the defining equation carries exp((g - g(0)) / lam)
        g = Polynomial([0.4, 1.0])
        np.testing.assert_allclose(resolvent_apply(lam, g, Polynomial([1.0]), z), np.exp(z / lam), rtol=1e-12)
        np.testing.assert_allclose(resolvent_apply(lam, monomial(2), Polynomial([1.0]), z),
                                   np.exp(z**2 / lam), rtol=1e-12)

    def test_zero_symbol(self):
        z = probe_points(20)
        h = KernelPower(0.6j, 1.5) + monomial(2)
        np.testing.assert_allclose(resolvent_apply(2.0, zero(), h, z), h(z), rtol=1e-12)

    def test_zero_lambda(self):
        with pytest.raises(InvalidParameterError):
            resolvent_apply(0.0, identity(), identity(), 0.5)

    @settings(max_examples=5, deadline=None)
    @given(st.floats(0.3, 3.0), st.floats(-math.pi, math.pi), st.integers(0, 4), st.floats(0.1, 0.8),
           st.floats(-math.pi, math.pi))
    def test_defining_identity(self, mod, arg, i, r, t):
        lam = mod * cmath.exp(1j * arg)
        g = symbols()[i]
        h = KernelPower(r * cmath.exp(1j * t), 2.0) + LogKernel(0.5j)
        f = resolvent_solution(lam, g, h)
        z = probe_points()
        residual = lam * f(z) - apply_tg(g, f, z) - h(z)
        assert np.max(np.abs(residual)) <= 1e-8

    @settings(max_examples=10, deadline=None)
    @given(st.complex_numbers(min_magnitude=0.2, max_magnitude=3), st.complex_numbers(max_magnitude=4))
    def test_linear_in_h(self, lam, c):
        g = LogKernel(1.0)
        h1, h2 = KernelPower(0.7, 1.0), monomial(2)
        z = probe_points(20)
        lhs = resolvent_apply(lam, g, h1 + h2 * c, z)
        rhs = resolvent_apply(lam, g, h1, z) + c * resolvent_apply(lam, g, h2, z)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * np.max(np.abs(rhs)))


class TestClassifier:
    def test_zero_symbol_matches_plain_suite(self):
        w = standard(1.0)
        v = resolvent_classify(1.5j, zero(), w, 2, small_suite())
        plain = lp_ratio_suite(w, 2, 1, small_suite())
        assert v.spread == pytest.approx(plain.spread, rel=1e-12)
        assert v.verdict == PLAUSIBLE

    def test_large_lambda(self):
        w = standard(1.0)
        v = resolvent_classify(1e6, LogKernel(1.0), w, 2, small_suite())
        base = resolvent_classify(1e6, zero(), w, 2, small_suite())
        assert v.verdict == base.verdict
        assert v.spread == pytest.approx(base.spread, rel=1e-4)

    def test_conjugate_lambda(self):
        w = standard(0.0)
        g = Polynomial([0.0, 1.0, 0.5])
        a = resolvent_classify(0.8 + 0.6j, g, w, 2, small_suite())
        b = resolvent_classify(0.8 - 0.6j, g, w, 2, small_suite())
        assert a.spread == pytest.approx(b.spread, rel=1e-6)

    def test_nonintegrable_twist_fails(self):
        # exp(2 Re(log(1/(1-z)) / lam)) = |1-z|^(-2/lam) is not integrable for lam = 0.5
        v = resolvent_classify(0.5, LogKernel(1.0), constant(), 2, small_suite())
        assert v.verdict == FAILS

    @pytest.mark.parametrize("lam", [2.0, 3j])
    def test_continuity(self, lam):
        g = LogKernel(1.0)
        w = standard(0.0)
        a = resolvent_classify(lam, g, w, 2, small_suite())
        b = resolvent_classify(lam * (1 + 1e-3), g, w, 2, small_suite())
        assert a.verdict == b.verdict
        assert b.spread == pytest.approx(a.spread, rel=0.05)

    def test_record(self):
        v = resolvent_classify(2.0, zero(), constant(), 2, small_suite())
        rec = v.as_record()
        assert rec["lambda"] == [2.0, 0.0]
        assert rec["verdict"] in {"in-resolvent-plausible", "equivalence-fails", "inconclusive"}
