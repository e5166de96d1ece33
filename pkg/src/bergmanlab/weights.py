"""Weights on the unit disc and their transforms.

A weight is a nonnegative density evaluated pointwise (vectorized over complex
arrays). Besides evaluation every weight knows how to compute its mass over
polar rectangles, which is what Carleson squares, K-tops and outer slices
reduce to. Structured weights compute those masses in closed form or through
1-D integrals:

* :class:`PowerRadial` -- ``c (1-r)^a (1+r)^b exp(-d/(1-r))``; covers the
  standard, radial power and exponential weights and is closed under
  products, powers and radial shifts.
* :class:`CallableRadial` -- any radial profile given as a function of r.
* :class:`SeparableWeight` -- ``R(r) |theta|^kappa`` (the spiral weight W).
* :class:`StolzWeight` -- a radial weight switched off (or to +inf) on the
  Stolz angle at 1.
* :class:`PointwiseWeight` -- anything else; masses come from quadrature.
"""

from __future__ import annotations

import ast
import math
import operator
import threading
from typing import Callable

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc, expn

from . import quadrature as quad
from .geometry import (
    CarlesonSquare,
    InvalidParameterError,
    PolarRect,
    PseudoDisc,
    check_interior,
    polar_rect_of,
)

TWO_PI = 2.0 * math.pi
TILDE_MIN_MODULUS = 0.01
MEMO_GRID = 1e-10


class InvalidWeightError(ValueError):
    """A weight construction would not give an integrable density."""


class CapabilityError(TypeError):
    """The requested operation needs a capability the weight lacks."""


def _arr(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


class Weight:
    """Base class. Subclasses implement ``__call__`` and ``rect_masses``."""

    label: str = "weight"
    is_radial: bool = False
    boundary_exponent: float = 0.0
    focus_angles: tuple = ()
    edges: Callable | None = None

    def __call__(self, z):
        raise NotImplementedError

    # -- masses ---------------------------------------------------------
    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        """Masses of polar rectangles given as parallel arrays."""
        values, _ = quad.integrate_rects(self, r_lo, r_hi, center, half_width)
        return np.asarray(values, dtype=float)

    def mass(self, region, spec: quad.QuadratureSpec | None = None) -> float:
        rect = polar_rect_of(region)
        if rect is not None:
            return float(self.rect_masses([rect.r_lo], [rect.r_hi], [rect.center], [rect.half_width])[0])
        res = quad.integrate(region, self, spec)
        return float(np.real(res.value))

    def square_masses(self, family) -> np.ndarray:
        return self.rect_masses(family.moduli, np.ones(len(family)), family.arguments, family.half_widths)

    def total_mass(self) -> float:
        return float(self.rect_masses([0.0], [1.0], [0.0], [math.pi])[0])

    # -- algebra --------------------------------------------------------
    def scaled(self, c: float) -> "Weight":
        return PointwiseWeight(lambda z, f=self, c=c: c * f(z), f"{c:g}*{self.label}",
                               focus=self.focus_angles, edges=self.edges,
                               boundary_exponent=self.boundary_exponent, radial=self.is_radial)

    def power(self, x: float) -> "Weight":
        if x == 1.0:
            return self
        return PointwiseWeight(lambda z, f=self, x=x: _safe_pow(f(z), x), f"({self.label})^{x:g}",
                               focus=self.focus_angles, edges=self.edges,
                               boundary_exponent=self.boundary_exponent * x, radial=self.is_radial)

    def times(self, other: "Weight") -> "Weight":
        if isinstance(other, (PowerRadial, CallableRadial)) and not isinstance(self, (PowerRadial, CallableRadial)):
            return _times_radial(self, other)
        return PointwiseWeight(lambda z, f=self, g=other: f(z) * g(z), f"{self.label}*{other.label}",
                               focus=tuple(self.focus_angles) + tuple(other.focus_angles),
                               edges=_merge_edges(self.edges, other.edges),
                               boundary_exponent=self.boundary_exponent + other.boundary_exponent,
                               radial=self.is_radial and other.is_radial)

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


def _safe_pow(v, x):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(v == 0.0, 0.0 if x > 0 else (1.0 if x == 0 else np.inf), np.abs(v) ** x)


def _merge_edges(e1, e2):
    if e1 is None:
        return e2
    if e2 is None:
        return e1
    return lambda z: np.asarray(e1(z), dtype=int) * 7919 + np.asarray(e2(z), dtype=int)


def _times_radial(w: Weight, radial: "RadialWeight") -> Weight:
    if isinstance(w, SeparableWeight):
        ray = w.ray_radial.times(radial) if w.ray_radial is not None else radial.scaled(1.0)
        return SeparableWeight(w.radial.times(radial), w.angular_exponent, w.ray_value, ray,
                               label=f"{w.label}*{radial.label}")
    if isinstance(w, StolzWeight):
        inside = w.inside.times(radial) if isinstance(w.inside, RadialWeight) else w.inside
        return StolzWeight(w.outside.times(radial), inside, label=f"{w.label}*{radial.label}")
    return Weight.times(w, PointwiseWeight(radial, radial.label, radial=True,
                                           boundary_exponent=radial.boundary_exponent))


# ---------------------------------------------------------------------------
# radial weights


class RadialWeight(Weight):
    """Weight depending on |z| only; masses reduce to 1-D radial moments."""

    is_radial = True

    def profile(self, r) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        return self.profile(np.abs(_arr(z)))

    def moment_tail(self, k: int, r) -> np.ndarray:
        """Integral of s^k R(s) over [r, 1)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return quad.batch_tail_integrals(lambda s: s**k * self.profile(s), r)

    def tail(self, r):
        """Tail integral of the radial profile over [r, 1)."""
        out = self.moment_tail(0, r)
        return float(out[0]) if np.ndim(r) == 0 else out

    def ring_masses(self, r_lo, r_hi) -> np.ndarray:
        """Integral of 2 s R(s) ds over [r_lo, r_hi): the mass of a full annulus."""
        r_lo = np.atleast_1d(np.asarray(r_lo, dtype=float))
        r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), r_lo.shape)
        keys = np.stack([r_lo, r_hi], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        lo_tail = self.moment_tail(1, uniq[:, 0])
        hi_tail = np.where(uniq[:, 1] >= 1.0, 0.0, self.moment_tail(1, np.minimum(uniq[:, 1], 1.0 - 1e-300)))
        vals = 2.0 * (lo_tail - hi_tail)
        return vals[np.asarray(inverse).ravel()]

    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        half = np.minimum(np.asarray(half_width, dtype=float), math.pi)
        return self.ring_masses(r_lo, r_hi) * np.broadcast_to(half, np.shape(np.atleast_1d(r_lo))) / math.pi

    def scaled(self, c: float) -> "RadialWeight":
        return CallableRadial(lambda s, f=self, c=c: c * f.profile(s), f"{c:g}*{self.label}",
                              self.boundary_exponent)

    def power(self, x: float) -> "RadialWeight":
        if x == 1.0:
            return self
        return CallableRadial(lambda s, f=self, x=x: _safe_pow(f.profile(s), x), f"({self.label})^{x:g}",
                              self.boundary_exponent * x)

    def times(self, other: Weight) -> Weight:
        if isinstance(other, RadialWeight):
            return CallableRadial(lambda s, f=self, g=other: f.profile(s) * g.profile(s),
                                  f"{self.label}*{other.label}",
                                  self.boundary_exponent + other.boundary_exponent)
        return other.times(self)


class PowerRadial(RadialWeight):
    """``coef (1-r)^a (1+r)^b exp(-d/(1-r))`` with d >= 0."""

    def __init__(self, coef: float = 1.0, a: float = 0.0, b: float = 0.0, d: float = 0.0, label: str | None = None):
        if coef < 0 or d < 0:
            raise InvalidParameterError("coefficient and exponential rate must be nonnegative")
        if d == 0 and not a > -1:
            raise InvalidWeightError(f"(1-r)^{a} is not integrable near the unit circle")
        self.coef, self.a, self.b, self.d = float(coef), float(a), float(b), float(d)
        self.boundary_exponent = math.inf if d > 0 else self.a
        self.label = label or f"power_radial(c={coef:g},a={a:g},b={b:g},d={d:g})"

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        t = 1.0 - r
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = self.coef * np.ones_like(r)
            if self.a != 0:
                v = v * t**self.a
            if self.b != 0:
                v = v * (1.0 + r) ** self.b
            if self.d != 0:
                v = v * np.exp(-self.d / t)
        return v

    def moment_tail(self, k: int, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        t = 1.0 - r
        c, a, b, d = self.coef, self.a, self.b, self.d
        if d == 0 and b == 0:
            terms = {0: [(1, 1)], 1: [(1, 1), (-1, 2)], 2: [(1, 1), (-2, 2), (1, 3)]}[k]
            return c * sum(s * t ** (a + m) / (a + m) for s, m in terms)
        if d == 0 and b == a:
            x = t * (1.0 + r)
            h = 0.5 * (k + 1)
            return c * 0.5 * beta_fn(a + 1.0, h) * betainc(a + 1.0, h, x)
        if d > 0 and a == 0 and b == 0:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                x = np.where(t > 0, d / np.maximum(t, 1e-300), np.inf)
                terms = {0: [(1, 0)], 1: [(1, 0), (-1, 1)], 2: [(1, 0), (-2, 1), (1, 2)]}[k]
                out = sum(s * t ** (m + 1) * expn(m + 2, x) for s, m in terms)
            return c * np.where(t > 0, out, 0.0)
        return super().moment_tail(k, r)

    def scaled(self, c: float) -> "PowerRadial":
        return PowerRadial(self.coef * c, self.a, self.b, self.d, f"{c:g}*{self.label}")

    def power(self, x: float) -> "PowerRadial":
        if x == 1.0:
            return self
        if self.d * x < 0:
            raise InvalidWeightError(f"({self.label})^{x:g} grows like exp(c/(1-r)) and is not integrable")
        return PowerRadial(self.coef**x, self.a * x, self.b * x, self.d * x, f"({self.label})^{x:g}")

    def times(self, other: Weight) -> Weight:
        if isinstance(other, PowerRadial):
            return PowerRadial(self.coef * other.coef, self.a + other.a, self.b + other.b, self.d + other.d,
                               f"{self.label}*{other.label}")
        return super().times(other)


class CallableRadial(RadialWeight):
    """Radial weight from a vectorized profile function of r."""

    def __init__(self, profile: Callable, label: str = "radial", boundary_exponent: float = 0.0):
        self._profile = profile
        self.label = label
        self.boundary_exponent = float(boundary_exponent)

    def profile(self, r):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.asarray(self._profile(np.asarray(r, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# non-radial structured weights


def _arc_pieces(center, half):
    """Split arcs [center-half, center+half] into sub-arcs inside [-pi, pi]."""
    center = np.asarray(center, dtype=float)
    half = np.asarray(half, dtype=float)
    c = np.mod(center + math.pi, TWO_PI) - math.pi
    u, v = c - half, c + half
    lo1 = np.maximum(u, -math.pi)
    hi1 = np.minimum(v, math.pi)
    # wrapped parts
    lo2 = np.where(u < -math.pi, u + TWO_PI, 0.0)
    hi2 = np.where(u < -math.pi, math.pi, 0.0)
    lo3 = np.where(v > math.pi, -math.pi, 0.0)
    hi3 = np.where(v > math.pi, v - TWO_PI, 0.0)
    return [(lo1, hi1), (lo2, hi2), (lo3, hi3)]


class SeparableWeight(Weight):
    """``R(|z|) |arg z|^kappa`` with arg in (-pi, pi]; on the ray arg z = 0 the
    value is ``ray_value * ray_radial(|z|)`` (``ray_radial`` defaults to 1)."""

    def __init__(self, radial: RadialWeight, angular_exponent: float, ray_value: float = 1.0,
                 ray_radial: RadialWeight | None = None, label: str | None = None):
        if not angular_exponent > -1:
            raise InvalidWeightError("angular exponent must exceed -1")
        self.radial = radial
        self.angular_exponent = float(angular_exponent)
        self.ray_value = float(ray_value)
        self.ray_radial = ray_radial
        self.boundary_exponent = radial.boundary_exponent
        self.label = label or f"{radial.label}*|theta|^{angular_exponent:g}"
        self.focus_angles = ((0.0, self.angular_exponent), (math.pi, 0.0))

    def __call__(self, z):
        z = _arr(z)
        r = np.abs(z)
        th = np.abs(np.angle(z))
        k = self.angular_exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = np.where(th > 0, th**k, 0.0)
            val = self.radial.profile(r) * ang
        ray = self.ray_value * (self.ray_radial.profile(r) if self.ray_radial is not None else 1.0)
        return np.where(th > 0, val, ray)

    def angular_masses(self, center, half_width) -> np.ndarray:
        k1 = self.angular_exponent + 1.0
        F = lambda t: np.sign(t) * np.abs(t) ** k1 / k1  # noqa: E731
        half = np.asarray(half_width, dtype=float)
        out = np.zeros(np.broadcast(np.asarray(center), half).shape)
        for lo, hi in _arc_pieces(center, np.minimum(half, math.pi)):
            out = out + np.where(hi > lo, F(hi) - F(lo), 0.0)
        full = half >= math.pi
        return np.where(full, 2.0 * math.pi**k1 / k1, out)

    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        radial = 0.5 * self.radial.ring_masses(r_lo, r_hi)
        return radial * self.angular_masses(center, half_width) / math.pi

    def scaled(self, c: float) -> "SeparableWeight":
        return SeparableWeight(self.radial.scaled(c), self.angular_exponent, self.ray_value * c,
                               self.ray_radial, f"{c:g}*{self.label}")

    def power(self, x: float) -> "SeparableWeight":
        if x == 1.0:
            return self
        ray = self.ray_radial.power(x) if self.ray_radial is not None else None
        return SeparableWeight(self.radial.power(x), self.angular_exponent * x, self.ray_value**x, ray,
                               f"({self.label})^{x:g}")

    def times(self, other: Weight) -> Weight:
        if isinstance(other, RadialWeight):
            return _times_radial(self, other)
        if isinstance(other, SeparableWeight):
            ray = (self.ray_radial or PowerRadial()).times(other.ray_radial or PowerRadial())
            return SeparableWeight(self.radial.times(other.radial),
                                   self.angular_exponent + other.angular_exponent,
                                   self.ray_value * other.ray_value, ray, f"{self.label}*{other.label}")
        return super().times(other)


def stolz_half_width(r):
    return 0.5 * (1.0 - np.asarray(r, dtype=float))


def _in_stolz(z):
    z = _arr(z)
    return np.abs(np.angle(z)) < 0.5 * (1.0 - np.abs(z))


class StolzWeight(Weight):
    """A radial weight outside the Stolz angle at 1 and ``inside`` within it.

    ``inside`` is 0, +inf, or another radial weight. With ``outside`` = 1 and
    ``inside`` = 0 this is the indicator of the disc minus the Stolz angle.
    """

    def __init__(self, outside: RadialWeight, inside: RadialWeight | float = 0.0, label: str | None = None):
        if not isinstance(inside, RadialWeight) and inside not in (0.0, math.inf):
            inside = PowerRadial(float(inside))
        self.outside = outside
        self.inside = inside
        self.boundary_exponent = outside.boundary_exponent
        self.label = label or f"stolz({outside.label})"
        self.focus_angles = ((0.0, 0.0),)
        self.edges = lambda z: _in_stolz(z).astype(int)

    def __call__(self, z):
        z = _arr(z)
        r = np.abs(z)
        inside = _in_stolz(z)
        out = self.outside.profile(r)
        if isinstance(self.inside, RadialWeight):
            ins = self.inside.profile(r)
        else:
            ins = self.inside
        return np.where(inside, ins, out)

    @staticmethod
    def _overlap_pieces(r_lo, r_hi, center, half):
        """Radial pieces on which the overlap length of the arc with the
        Stolz arc |theta| < (1-s)/2 is linear in s.

        Returns breakpoints (n, 5) and overlap values at them.
        """
        c = np.mod(np.asarray(center, dtype=float) + math.pi, TWO_PI) - math.pi
        half = np.minimum(np.asarray(half, dtype=float), math.pi)
        full = half >= math.pi
        u = np.where(full, -math.pi, c - half)
        v = np.where(full, math.pi, c + half)
        # kinks of the overlap as a function of w = (1-s)/2
        kinks = np.stack([np.abs(u), np.abs(v)], axis=1)
        s_k = 1.0 - 2.0 * kinks
        lo = r_lo[:, None]
        hi = r_hi[:, None]
        s_k = np.clip(s_k, lo, hi)
        pts = np.sort(np.concatenate([lo, s_k, hi], axis=1), axis=1)

        def overlap(s):
            w = 0.5 * (1.0 - s)
            total = np.zeros_like(s)
            for shift in (-TWO_PI, 0.0, TWO_PI):
                a = np.maximum(u[:, None] + shift, -w)
                b = np.minimum(v[:, None] + shift, w)
                total = total + np.maximum(b - a, 0.0)
            return np.minimum(total, 2.0 * w)

        return pts, overlap(pts), np.where(full, TWO_PI, 2.0 * half)

    def _weighted_overlap(self, radial: RadialWeight, pts, ov):
        """Sum over pieces of the integral of s R(s) * overlap(s)."""
        x, y = pts[:, :-1], pts[:, 1:]
        ox, oy = ov[:, :-1], ov[:, 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(y > x, (oy - ox) / (y - x), 0.0)
        inter = ox - slope * x
        shape = x.shape

        def moment(k, a, b):
            ta = radial.moment_tail(k, a.ravel()).reshape(shape)
            tb = np.where(b >= 1.0, 0.0, radial.moment_tail(k, np.minimum(b, 1.0 - 1e-16).ravel()).reshape(shape))
            return ta - tb

        m1 = moment(1, x, y)
        m2 = moment(2, x, y)
        piece = np.where(y > x, inter * m1 + slope * m2, 0.0)
        return piece.sum(axis=1)

    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        r_lo = np.atleast_1d(np.asarray(r_lo, dtype=float))
        r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), r_lo.shape)
        center = np.broadcast_to(np.asarray(center, dtype=float), r_lo.shape)
        half = np.broadcast_to(np.asarray(half_width, dtype=float), r_lo.shape)
        pts, ov, width = self._overlap_pieces(r_lo, r_hi, center, half)
        overlap_out = self._weighted_overlap(self.outside, pts, ov)
        full_out = 0.5 * self.outside.ring_masses(r_lo, r_hi) * width
        mass = (full_out - overlap_out) / math.pi
        if isinstance(self.inside, RadialWeight):
            mass = mass + self._weighted_overlap(self.inside, pts, ov) / math.pi
        elif self.inside == math.inf:
            # positive overlap area means infinite mass
            ov_area = self._weighted_overlap(PowerRadial(), pts, ov)
            mass = np.where(ov_area > 0, math.inf, mass)
        return np.maximum(mass, 0.0)

    def scaled(self, c: float) -> "StolzWeight":
        inside = self.inside.scaled(c) if isinstance(self.inside, RadialWeight) else self.inside
        return StolzWeight(self.outside.scaled(c), inside, f"{c:g}*{self.label}")

    def power(self, x: float) -> "StolzWeight":
        if x == 1.0:
            return self
        if isinstance(self.inside, RadialWeight):
            inside = self.inside.power(x)
        elif x == 0:
            inside = PowerRadial()
        elif self.inside == 0.0:
            inside = 0.0 if x > 0 else math.inf
        else:
            inside = math.inf if x > 0 else 0.0
        return StolzWeight(self.outside.power(x), inside, f"({self.label})^{x:g}")

    def times(self, other: Weight) -> Weight:
        if isinstance(other, RadialWeight):
            return _times_radial(self, other)
        if isinstance(other, StolzWeight):
            a, b = self.inside, other.inside
            if isinstance(a, RadialWeight) and isinstance(b, RadialWeight):
                inside = a.times(b)
            elif math.inf in (a, b) and 0.0 not in (a, b):
                inside = math.inf
            elif 0.0 in (a, b) and math.inf not in (a, b):
                inside = 0.0
            else:
                return super().times(other)
            return StolzWeight(self.outside.times(other.outside), inside, f"{self.label}*{other.label}")
        return super().times(other)


class PointwiseWeight(Weight):
    """Generic weight from a vectorized callable; masses by quadrature."""

    def __init__(self, fn: Callable, label: str = "pointwise", *, focus=(), edges=None,
                 boundary_exponent: float = 0.0, radial: bool = False):
        self.fn = fn
        self.label = label
        self.focus_angles = tuple(focus)
        self.edges = edges
        self.boundary_exponent = float(boundary_exponent)
        self.is_radial = bool(radial)

    def __call__(self, z):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.asarray(self.fn(_arr(z)), dtype=float)

    def profile(self, r):
        if not self.is_radial:
            raise CapabilityError(f"{self.label} is not radial")
        return self(np.asarray(r, dtype=float) + 0j)

    def tail(self, r):
        if not self.is_radial:
            raise CapabilityError(f"{self.label} is not radial")
        out = quad.batch_tail_integrals(self.profile, np.atleast_1d(np.asarray(r, dtype=float)))
        return float(out[0]) if np.ndim(r) == 0 else out


# ---------------------------------------------------------------------------
# catalog


def constant(c: float = 1.0) -> PowerRadial:
    return PowerRadial(c, label="constant" if c == 1.0 else f"constant({c:g})")


def standard(alpha: float) -> PowerRadial:
    """(alpha + 1)(1 - |z|^2)^alpha, alpha > -1."""
    if not alpha > -1:
        raise InvalidWeightError("standard weight needs alpha > -1")
    return PowerRadial(alpha + 1.0, alpha, alpha, label=f"standard(alpha={alpha:g})")


def radial_power(alpha: float) -> PowerRadial:
    """(1 - |z|)^alpha, alpha > -1."""
    if not alpha > -1:
        raise InvalidWeightError("radial power weight needs alpha > -1")
    return PowerRadial(1.0, alpha, label=f"radial_power(alpha={alpha:g})")


def exponential(rate: float = 1.0) -> PowerRadial:
    """exp(-rate / (1 - |z|)), rate > 0."""
    if not rate > 0:
        raise InvalidParameterError("exponential weight needs a positive rate")
    return PowerRadial(1.0, d=rate, label=f"exponential(rate={rate:g})")


def spiral_w(epsilon: float) -> SeparableWeight:
    """((1 - r)|theta|)^-(1 - epsilon/2), equal to 1 on the ray theta = 0."""
    if not 0 < epsilon < 1:
        raise InvalidParameterError("spiral weight needs epsilon in (0, 1)")
    c = 1.0 - 0.5 * epsilon
    return SeparableWeight(PowerRadial(1.0, -c), -c, 1.0, None, label=f"spiral_w(epsilon={epsilon:g})")


def stolz_indicator() -> StolzWeight:
    """Indicator of the disc minus the Stolz angle with vertex 1."""
    return StolzWeight(PowerRadial(), 0.0, label="stolz_indicator")


_ALLOWED_FUNCS = {
    "abs": np.abs, "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos,
    "real": np.real, "imag": np.imag, "conj": np.conj, "angle": np.angle,
}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def compile_expression(expr: str) -> Callable:
    """Safe vectorized evaluator for an arithmetic expression in z, r, theta."""
    tree = ast.parse(expr, mode="eval")

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id == "pi":
                return math.pi
            raise InvalidParameterError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _ALLOWED_FUNCS and not node.keywords):
            return _ALLOWED_FUNCS[node.func.id](*(ev(a, env) for a in node.args))
        raise InvalidParameterError(f"unsupported syntax in expression {expr!r}")

    ev(tree, {"z": 0.5 + 0j, "r": 0.5, "theta": 0.0})  # validate once

    def fn(z):
        z = _arr(z)
        return ev(tree, {"z": z, "r": np.abs(z), "theta": np.angle(z)})

    return fn


def user_weight(expression: str, label: str | None = None, radial: bool = False,
                boundary_exponent: float = 0.0) -> Weight:
    """Weight given by an expression in ``z``, ``r`` and ``theta``."""
    fn = compile_expression(expression)
    label = label or f"user({expression})"
    if radial:
        return CallableRadial(lambda r: np.real(fn(np.asarray(r) + 0j)), label, boundary_exponent)
    return PointwiseWeight(lambda z: np.real(fn(z)), label, boundary_exponent=boundary_exponent)


# ---------------------------------------------------------------------------
# operations


def tail_integral(w: Weight, r):
    """Integral of the radial profile of ``w`` over [r, 1)."""
    if not w.is_radial:
        raise CapabilityError(f"tail integral needs a radial weight, got {w.label}")
    return w.tail(r)


def square_mass(w: Weight, square: CarlesonSquare, spec: quad.QuadratureSpec | None = None) -> float:
    return w.mass(square, spec)


def region_mass(w: Weight, region, spec: quad.QuadratureSpec | None = None) -> float:
    return w.mass(region, spec)


def beta_shift(w: Weight, beta: float) -> Weight:
    """The weight (1 - |z|)^beta w(z)."""
    if beta == 0:
        return w
    if not w.boundary_exponent + beta > -1:
        raise InvalidWeightError(
            f"shifting {w.label} by {beta:g} gives boundary exponent "
            f"{w.boundary_exponent + beta:g} <= -1")
    factor = PowerRadial(1.0, beta, label=f"(1-r)^{beta:g}")
    if isinstance(w, PowerRadial):
        out = PowerRadial(w.coef, w.a + beta, w.b, w.d, f"{w.label}[{beta:g}]")
    elif isinstance(w, _BetaShifted):
        return beta_shift(w.base, w.beta + beta)
    elif isinstance(w, (RadialWeight, SeparableWeight, StolzWeight)):
        out = w.times(factor)
        out.label = f"{w.label}[{beta:g}]"
    else:
        out = _BetaShifted(w, beta)
    _check_integrable(out)
    return out


class _BetaShifted(PointwiseWeight):
    def __init__(self, base: Weight, beta: float):
        self.base = base
        self.beta = float(beta)
        super().__init__(lambda z: (1.0 - np.abs(z)) ** self.beta * base(z), f"{base.label}[{beta:g}]",
                         focus=base.focus_angles, edges=base.edges,
                         boundary_exponent=base.boundary_exponent + beta, radial=base.is_radial)


def _check_integrable(w: Weight, spec: quad.QuadratureSpec | None = None):
    if isinstance(w, (RadialWeight, SeparableWeight, StolzWeight)):
        total = w.total_mass()
        ok = np.isfinite(total)
    else:
        res = quad.integrate("disc", w, spec or quad.QuadratureSpec(relative_tolerance=1e-4))
        ok = np.isfinite(res.value) and np.isfinite(res.error_estimate)
    if not ok:
        raise InvalidWeightError(f"{w.label} is not integrable over the disc")


class _Memo:
    """Pure-function cache keyed on coordinates quantized to MEMO_GRID.

    The store is cleared once it holds ``capacity`` entries.
    """

    def __init__(self, compute: Callable[[np.ndarray], np.ndarray], capacity: int = 1_000_000):
        self.compute = compute
        self.capacity = capacity
        self.store: dict[tuple[int, int], float] = {}
        self.lock = threading.Lock()

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_1d(z)
        qx = np.round(z.real / MEMO_GRID).astype(np.int64)
        qy = np.round(z.imag / MEMO_GRID).astype(np.int64)
        keys = list(zip(qx.tolist(), qy.tolist()))
        store = self.store
        out = np.empty(z.size)
        missing = []
        for i, key in enumerate(keys):
            v = store.get(key)
            if v is None:
                missing.append(i)
            else:
                out[i] = v
        if missing:
            idx = np.asarray(missing)
            zq = (qx[idx] + 1j * qy[idx]) * MEMO_GRID
            uniq, inv = np.unique(zq, return_inverse=True)
            vals = np.asarray(self.compute(uniq), dtype=float)
            out[idx] = vals[np.asarray(inv).ravel()]
            with self.lock:
                if len(store) + len(missing) > self.capacity:
                    store.clear()
                for i, j in zip(idx.tolist(), np.asarray(inv).ravel().tolist()):
                    store.setdefault(keys[i], float(vals[j]))
        return out


class TildeWeight(PointwiseWeight):
    """The average weight w(S(z)) / (1 - |z|)^2."""

    def __init__(self, base: Weight):
        self.base = base
        # closed-form masses are cheaper to recompute than to look up
        memo = _Memo(self._compute) if type(base).rect_masses is Weight.rect_masses else None
        evaluate = memo if memo is not None else self._compute
        radial = base.is_radial

        def fn(z):
            z = _arr(z)
            shape = z.shape
            zz = np.abs(z).ravel() + 0j if radial else z.ravel()
            return evaluate(zz).reshape(shape)

        super().__init__(fn, f"tilde({base.label})", focus=base.focus_angles, edges=self._edges,
                         boundary_exponent=base.boundary_exponent, radial=radial)
        self.memo = memo

    def _edges(self, z):
        # the average is singular where a square side crosses an angular focus
        z = np.asarray(z)
        half = 0.5 * (1.0 - np.abs(z))
        ang = np.angle(z)
        lab = np.zeros(z.shape, dtype=int)
        for i, focus in enumerate(self.base.focus_angles):
            phi, expo = focus if isinstance(focus, tuple) else (focus, 1.0)
            if expo != 0.0:
                d = np.abs(np.mod(ang - phi + math.pi, TWO_PI) - math.pi)
                lab += (d > half).astype(int) << i
        return lab

    def _compute(self, z: np.ndarray) -> np.ndarray:
        r = np.abs(z)
        small = r < TILDE_MIN_MODULUS
        ang = np.angle(z)
        r = np.where(small, TILDE_MIN_MODULUS, r)
        t = 1.0 - r
        masses = self.base.rect_masses(r, np.ones_like(r), ang, 0.5 * t)
        return masses / t**2


class HorizontalWeight(PointwiseWeight):
    """The average weight w(Delta(z, r)) / (1 - |z|)^2 over pseudo-hyperbolic discs."""

    def __init__(self, base: Weight, radius: float, order: int = 16, angles: int = 48):
        if not 0 < radius < 1:
            raise InvalidParameterError("pseudo-disc radius must lie in (0, 1)")
        self.base = base
        self.radius = float(radius)
        self.order = order
        self.angles = angles
        memo = _Memo(self._compute)
        radial = base.is_radial

        def fn(z):
            z = _arr(z)
            shape = z.shape
            zz = np.abs(z).ravel() + 0j if radial else z.ravel()
            return memo(zz).reshape(shape)

        super().__init__(fn, f"horizontal({base.label},r={radius:g})", focus=base.focus_angles,
                         boundary_exponent=base.boundary_exponent, radial=radial)

    def _compute(self, z: np.ndarray, chunk: int = 2048) -> np.ndarray:
        out = np.empty(z.size)
        for s in range(0, z.size, chunk):
            out[s:s + chunk] = self._disc_masses(z[s:s + chunk]) / (1.0 - np.abs(z[s:s + chunk])) ** 2
        return out

    def _disc_masses(self, z: np.ndarray) -> np.ndarray:
        s = self.radius
        m2 = np.abs(z) ** 2
        denom = 1.0 - s * s * m2
        centers = z * (1.0 - s * s) / denom
        radii = s * (1.0 - m2) / denom
        x, w = quad.gauss_legendre(self.order)
        rho = 0.5 * (1.0 + x)                         # fraction of the radius
        t = TWO_PI * np.arange(self.angles) / self.angles
        pts = centers[:, None, None] + radii[:, None, None] * rho[None, :, None] * np.exp(1j * t)[None, None, :]
        vals = self.base(pts.ravel()).reshape(pts.shape)
        wr = 0.5 * w * rho                            # rho drho on [0, 1]
        integral = np.einsum("nij,i->n", vals, wr) * (TWO_PI / self.angles)
        return integral * radii**2 / math.pi


def tilde_average(w: Weight) -> Weight:
    """The weight z -> w(S(z)) / (1 - |z|)^2 (moduli below 0.01 are raised to 0.01)."""
    if isinstance(w, RadialWeight):
        def prof(r, w=w):
            r = np.maximum(np.asarray(r, dtype=float), TILDE_MIN_MODULUS)
            out = w.ring_masses(r, np.ones_like(r)) / (TWO_PI * (1.0 - r))
            return out.reshape(np.shape(r))
        return CallableRadial(prof, f"tilde({w.label})", w.boundary_exponent)
    return TildeWeight(w)


def horizontal_average(w: Weight, r: float) -> Weight:
    return HorizontalWeight(w, r)


def exponential_twist(w: Weight, g, lam: complex, p: float, check: bool = True) -> Weight:
    """The weight w(z) exp(p Re(g(z) / lam)).

    ``g`` is a vectorized analytic function (see :mod:`bergmanlab.functions`).
    """
    lam = complex(lam)
    if lam == 0:
        raise InvalidParameterError("lambda must be nonzero")
    if not p > 0:
        raise InvalidParameterError("p must be positive")
    if getattr(g, "is_zero", False):
        return w
    inv = 1.0 / lam

    def fn(z, w=w, g=g):
        z = _arr(z)
        return w(z) * np.exp(p * np.real(np.asarray(g(z)) * inv))

    focus = tuple(w.focus_angles) + tuple((a, 0.0) for a in getattr(g, "focus_angles", ()))
    out = PointwiseWeight(fn, f"twist({w.label},lambda={lam:g},p={p:g})", focus=focus, edges=w.edges,
                          boundary_exponent=w.boundary_exponent)
    if check:
        _check_integrable(out)
    return out


def product(*weights: Weight) -> Weight:
    out = weights[0]
    for w in weights[1:]:
        out = out.times(w)
    return out


def quotient(w: Weight, v: Weight) -> Weight:
    """The pointwise ratio w / v."""
    return w.times(v.power(-1.0))


def disc_mass(w: Weight, center: complex, radius: float) -> float:
    return w.mass(PseudoDisc(check_interior(center), radius))


__all__ = [
    "Weight", "RadialWeight", "PowerRadial", "CallableRadial", "SeparableWeight", "StolzWeight",
    "PointwiseWeight", "TildeWeight", "HorizontalWeight", "InvalidWeightError", "CapabilityError",
    "constant", "standard", "radial_power", "exponential", "spiral_w", "stolz_indicator", "user_weight",
    "tail_integral", "square_mass", "region_mass", "beta_shift", "tilde_average", "horizontal_average",
    "exponential_twist", "product", "quotient", "compile_expression", "PolarRect",
]
