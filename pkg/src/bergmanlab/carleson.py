"""Measures on the disc, Carleson constants and the Hormander maximal function."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import kernels
from . import quadrature as quad
from .estimates import ConstantEstimate, estimate_from_samples
from .functions import AnalyticFunction, choose_gamma, kernel_test_function
from .geometry import (CarlesonSquare, InvalidParameterError, InvalidRegionError, PolarRect,
                       SquareFamily, angular_distance, check_interior, dyadic_family,
                       polar_rect_of)
from .norms import bergman_integral
from .weights import Weight

TWO_PI = 2.0 * math.pi
AVERAGE_RULE = {"annuli": 10, "angular_cells": 2, "order": 8}


# ---------------------------------------------------------------------------
# measures


class DiscMeasure:
    """Positive finite measure on the disc."""

    label = "measure"
    is_radial = False

    def measure_of(self, region) -> float:
        raise NotImplementedError

    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        raise NotImplementedError

    def square_masses(self, family: SquareFamily) -> np.ndarray:
        return self.rect_masses(family.moduli, np.ones(len(family)), family.arguments, family.half_widths)

    def integral(self, fn: Callable, spec: quad.QuadratureSpec | None = None,
                 focus: tuple = ()) -> float:
        """Integral of a nonnegative pointwise function against the measure."""
        raise NotImplementedError

    def total_mass(self) -> float:
        return float(self.rect_masses([0.0], [1.0], [0.0], [math.pi])[0])

    def scaled(self, c: float) -> "DiscMeasure":
        raise NotImplementedError


class DensityMeasure(DiscMeasure):
    """mu = density * dA for a weight-like density."""

    def __init__(self, density: Weight, check: bool = True):
        self.density = density
        self.label = f"density[{density.label}]"
        self.is_radial = bool(getattr(density, "is_radial", False))
        if check:
            total = self.total_mass()
            if not math.isfinite(total):
                raise InvalidParameterError(f"measure {self.label} has infinite total mass")

    def measure_of(self, region) -> float:
        if isinstance(region, str) and region == "disc":
            return self.total_mass()
        return self.density.mass(region)

    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        return self.density.rect_masses(r_lo, r_hi, center, half_width)

    def integral(self, fn, spec=None, focus=()):
        w = self.density

        def integrand(z):
            return fn(z) * w(z)

        res = quad.integrate("disc", integrand, spec, focus=tuple(w.focus_angles) + tuple(focus),
                             edges=w.edges)
        return float(np.real(res.value))

    def scaled(self, c):
        return DensityMeasure(self.density.scaled(c), check=False)


class AtomicMeasure(DiscMeasure):
    """Finite sum of point masses."""

    def __init__(self, points: Iterable[complex], masses: Iterable[float]):
        pts = np.atleast_1d(np.asarray(list(points), dtype=complex))
        m = np.atleast_1d(np.asarray(list(masses), dtype=float))
        if pts.shape != m.shape:
            raise InvalidParameterError("points and masses must have equal length")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise InvalidParameterError("atom masses must be positive and finite")
        if np.any(np.abs(pts) >= 1.0):
            raise InvalidParameterError("atoms must lie in the open disc")
        self.points, self.masses = pts, m
        self.label = f"atoms[{pts.size}]"

    def measure_of(self, region) -> float:
        if isinstance(region, str):
            if region != "disc":
                raise InvalidRegionError(f"unknown region {region!r}")
            return float(self.masses.sum())
        if self.points.size == 0:
            return 0.0
        inside = np.asarray(region.contains(self.points), dtype=bool)
        return float(self.masses[inside].sum())

    def rect_masses(self, r_lo, r_hi, center, half_width) -> np.ndarray:
        r_lo = np.atleast_1d(np.asarray(r_lo, dtype=float))
        r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), r_lo.shape)
        center = np.broadcast_to(np.asarray(center, dtype=float), r_lo.shape)
        half = np.broadcast_to(np.asarray(half_width, dtype=float), r_lo.shape)
        if self.points.size == 0:
            return np.zeros(r_lo.size)
        ar, at = np.abs(self.points), np.angle(self.points)
        if np.all(r_hi >= 1.0):
            return np.asarray(kernels.mass_in_squares(ar, at, self.masses, r_lo, center, half))
        inside = ((ar[None, :] >= r_lo[:, None]) & (ar[None, :] < r_hi[:, None])
                  & (angular_distance(at[None, :], center[:, None]) <= half[:, None]))
        return inside.astype(float) @ self.masses

    def integral(self, fn, spec=None, focus=()):
        if self.points.size == 0:
            return 0.0
        return float(np.sum(np.asarray(fn(self.points), dtype=float) * self.masses))

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def scaled(self, c):
        if c == 0:
            return AtomicMeasure([], [])
        return AtomicMeasure(self.points, c * self.masses)


def measure_of(mu: DiscMeasure, region) -> float:
    """mu(region): exact for atoms, structured or quadrature for densities."""
    return mu.measure_of(region)


def zero_measure() -> AtomicMeasure:
    return AtomicMeasure([], [])


# ---------------------------------------------------------------------------
# Carleson constants


def _check_pq(p: float, q: float):
    if not (p > 0 and q > 0):
        raise InvalidParameterError("p and q must be positive")
    if q < p:
        raise InvalidParameterError(f"need p <= q for the Carleson condition, got p={p}, q={q}")


def _with_atom_squares(mu: DiscMeasure, family: SquareFamily):
    """Family arrays extended by the self-anchored squares of atoms."""
    r, t, lv = family.moduli, family.arguments, family.levels.astype(float)
    if isinstance(mu, AtomicMeasure) and mu.points.size:
        pts = mu.points[np.abs(mu.points) > 0]
        ar = np.abs(pts)
        r = np.concatenate([r, ar])
        t = np.concatenate([t, np.angle(pts)])
        lv = np.concatenate([lv, np.floor(-np.log2(1.0 - ar))])
    return r, t, lv


def carleson_constant(mu: DiscMeasure, w: Weight, p: float, q: float,
                      family: SquareFamily | None = None) -> ConstantEstimate:
    """Max over squares of mu(S) / w(S)^(q/p).

    The self-anchored squares of atoms are added to the family.
    """
    _check_pq(p, q)
    family = family or dyadic_family(10)
    r, t, lv = _with_atom_squares(mu, family)
    half = 0.5 * (1.0 - r)
    num = mu.rect_masses(r, np.ones(r.size), t, half)
    den = np.asarray(w.rect_masses(r, np.ones(r.size), t, half), dtype=float) ** (q / p)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(num == 0, 0.0, num / den)
    return estimate_from_samples(vals, lv, r * np.exp(1j * t),
                                 note=f"carleson constant, p={p:g}, q={q:g}")


def carleson_exponent(beta: float, alpha: float, p: float, q: float) -> float:
    """Exponent s with mu(S(a)) / w(S(a))^(q/p) ~ (1-|a|)^s for standard weights."""
    return (beta + 2.0) - (alpha + 2.0) * q / p


def measured_exponent(estimate_or_series) -> float:
    """Decay exponent read off per-level maxima: minus the log2 slope per level."""
    series = getattr(estimate_or_series, "level_max", estimate_or_series)
    s = np.asarray(series, dtype=float)
    return float(-np.polyfit(np.arange(s.size), np.log2(s), 1)[0])


def level_profile(mu: DiscMeasure, w: Weight, p: float, q: float, levels: int):
    """Per-level maxima of mu(S)/w(S)^(q/p) on the dyadic family (no running max)."""
    _check_pq(p, q)
    fam = dyadic_family(levels)
    r, t, lv = _with_atom_squares(mu, fam)
    half = 0.5 * (1.0 - r)
    num = mu.rect_masses(r, np.ones(r.size), t, half)
    den = np.asarray(w.rect_masses(r, np.ones(r.size), t, half), dtype=float) ** (q / p)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(num == 0, 0.0, num / den)
    out = np.zeros(levels)
    wit = np.zeros(levels, dtype=complex)
    for n in range(1, levels + 1):
        sel = np.flatnonzero(lv == n)
        if sel.size:
            i = sel[int(np.argmax(vals[sel]))]
            out[n - 1], wit[n - 1] = vals[i], r[i] * np.exp(1j * t[i])
    return out, wit


@dataclass
class VanishingProfile:
    """Per-level maxima with a vanishing verdict."""

    levels: np.ndarray
    maxima: np.ndarray
    witnesses: np.ndarray
    vanishing: bool
    threshold: float = 0.1

    @property
    def verdict(self) -> str:
        return "vanishing" if self.vanishing else "not vanishing"

    def as_record(self) -> dict:
        return {"levels": [int(v) for v in self.levels],
                "maxima": [float(v) for v in self.maxima],
                "witnesses": [[float(z.real), float(z.imag)] for z in self.witnesses],
                "verdict": self.verdict}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["level", "max", "witness_re", "witness_im"])
        for lv, m, z in zip(self.levels, self.maxima, self.witnesses):
            writer.writerow([int(lv), repr(float(m)), repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()


def profile_vanishes(maxima, threshold: float = 0.1, window: int = 4) -> bool:
    """True when the last ``window`` entries do not increase and the final one
    is at most ``threshold`` times the overall maximum."""
    m = np.asarray(maxima, dtype=float)
    if m.size < window or not np.all(np.isfinite(m)):
        return False
    top = float(np.max(m))
    if top == 0.0:
        return True
    tail = m[-window:]
    nonincreasing = bool(np.all(tail[1:] <= tail[:-1] * (1.0 + 1e-12)))
    return nonincreasing and tail[-1] <= threshold * top


def vanishing_profile(mu: DiscMeasure, w: Weight, p: float, q: float, levels: int = 10,
                      threshold: float = 0.1) -> VanishingProfile:
    """Per-level maxima of mu(S)/w(S)^(q/p) for levels 1..``levels``."""
    maxima, wit = level_profile(mu, w, p, q, levels)
    return VanishingProfile(np.arange(1, levels + 1), maxima, wit,
                            profile_vanishes(maxima, threshold), threshold)


# ---------------------------------------------------------------------------
# test-function lower bound


def embedding_lower_bound(mu: DiscMeasure, w: Weight, p: float, q: float,
                          gamma: float | None = None, family: SquareFamily | None = None,
                          spec: quad.QuadratureSpec | None = None) -> ConstantEstimate:
    """Max over anchors of (integral of |F_a|^q dmu)^(1/q) / ||F_a||_{A^p_w}."""
    _check_pq(p, q)
    family = family or dyadic_family(6, per_level=8)
    if gamma is None:
        gamma, _ = choose_gamma(w, p)
    if isinstance(mu, AtomicMeasure) and mu.points.size == 0:
        return estimate_from_samples(np.zeros(len(family)), family.levels, family.anchors,
                                     note="zero measure")
    anchors = family.anchors
    share = w.is_radial and mu.is_radial
    if share:
        keys, inverse = np.unique(np.round(family.moduli, 15), return_inverse=True)
        work = keys.astype(complex)
    else:
        inverse, work = None, anchors
    vals = np.zeros(work.size)
    for i, a in enumerate(work):
        f = kernel_test_function(complex(a), p, gamma)
        top = mu.integral(lambda z, f=f: np.abs(f(z)) ** q, spec, focus=f.focus_angles)
        bottom = float(np.real(bergman_integral(f, w, p, spec).value))
        vals[i] = top ** (1.0 / q) / bottom ** (1.0 / p)
    if share:
        vals = vals[np.asarray(inverse).ravel()]
    return estimate_from_samples(vals, family.levels, anchors,
                                 note=f"test-function lower bound, gamma={gamma:g}")


# ---------------------------------------------------------------------------
# maximal function


@dataclass(frozen=True)
class RectIndicator:
    """Indicator of a polar rectangle (or Carleson square), integrated exactly."""

    rect: PolarRect

    @classmethod
    def of(cls, region) -> "RectIndicator":
        rect = polar_rect_of(region)
        if rect is None:
            raise InvalidRegionError(f"no polar rectangle for {region!r}")
        return cls(rect)

    def __call__(self, z):
        return np.asarray(self.rect.contains(z), dtype=float)

    def power(self, x: float) -> "RectIndicator":
        return self


def _angular_overlap(c1, h1, c2, h2):
    """Overlap arcs of two arcs given by centre and half width; returns (centres, halves)."""
    if h1 >= math.pi:
        return [(c2, h2)]
    if h2 >= math.pi:
        return [(c1, h1)]
    out = []
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(c1 - h1, c2 + shift - h2)
        hi = min(c1 + h1, c2 + shift + h2)
        if hi > lo:
            out.append((0.5 * (lo + hi), 0.5 * (hi - lo)))
    return out


def _indicator_masses(ind: RectIndicator, w: Weight, r, t, h) -> np.ndarray:
    """w(S_i intersect rect) for squares (r_i, t_i, h_i) reaching the unit circle."""
    rect = ind.rect
    lo_list, hi_list, c_list, h_list, owner = [], [], [], [], []
    for i, (ri, ti, hi) in enumerate(zip(r, t, h)):
        r_lo, r_hi = max(ri, rect.r_lo), rect.r_hi
        if r_hi <= r_lo:
            continue
        for c, hw in _angular_overlap(ti, hi, rect.center, rect.half_width):
            lo_list.append(r_lo)
            hi_list.append(r_hi)
            c_list.append(c)
            h_list.append(hw)
            owner.append(i)
    out = np.zeros(len(r))
    if owner:
        m = w.rect_masses(np.array(lo_list), np.array(hi_list), np.array(c_list), np.array(h_list))
        np.add.at(out, np.array(owner), np.asarray(m, dtype=float))
    return out


def square_averages(phi, w: Weight, r, t, h, cache: dict | None = None) -> np.ndarray:
    """Averages (1/w(S)) * integral over S of |phi| w, for squares given by arrays.

    Indicators of polar rectangles are handled exactly; other functions use a
    fixed graded rule, with the same rule for numerator and denominator so
    that constants average to themselves. ``cache`` stores the denominators
    between calls with the same weight and squares.
    """
    r, t, h = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (r, t, h))
    if isinstance(phi, RectIndicator):
        num = _indicator_masses(phi, w, r, t, h)
        den = np.asarray(w.rect_masses(r, np.ones(r.size), t, h), dtype=float)
    else:
        num, _ = quad.integrate_rects(lambda z: np.abs(phi(z)) * w(z), r, 1.0, t, h, **AVERAGE_RULE)
        key = (id(w), r.tobytes(), t.tobytes())
        if cache is not None and key in cache:
            den = cache[key]
        else:
            den, _ = quad.integrate_rects(w, r, 1.0, t, h, **AVERAGE_RULE)
            if cache is not None:
                cache[key] = den
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(num == 0, 0.0, np.real(num) / np.real(den))


def maximal_function(phi, w: Weight, points, family: SquareFamily | None = None,
                     cache: dict | None = None) -> np.ndarray:
    """M_w(phi) at many points: max of square averages over family squares
    containing each point and the point's self-anchored square."""
    family = family or dyadic_family(8, per_level=64)
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(np.abs(pts) == 0):
        raise InvalidParameterError("the maximal function needs z != 0 (no containing square at 0)")
    check_interior(complex(pts[np.argmax(np.abs(pts))]))
    fr, ft, fh = family.moduli, family.arguments, family.half_widths
    pr, pt = np.abs(pts), np.angle(pts)
    fam_avg = square_averages(phi, w, fr, ft, fh, cache)
    own_avg = square_averages(phi, w, pr, pt, 0.5 * (1.0 - pr), cache)
    best, _ = kernels.containing_max(pr, pt, fr, ft, fh, fam_avg)
    return np.maximum(np.asarray(best), own_avg)


def hormander_maximal(phi, w: Weight, z: complex, family: SquareFamily | None = None,
                      spec: quad.QuadratureSpec | None = None) -> float:
    """M_w(phi)(z) = max over squares S containing z of (1/w(S)) * integral_S |phi| w dA.

    The supremum is sampled over ``family`` plus the self-anchored square S(z).
    Averages use adaptive quadrature (exact masses for rectangle indicators).
    """
    z = check_interior(z)
    if z == 0:
        raise InvalidParameterError("no Carleson square contains the origin")
    family = family or dyadic_family(8, per_level=64)
    r, t = abs(z), math.atan2(z.imag, z.real)
    hit = np.flatnonzero((family.moduli <= r) & (angular_distance(t, family.arguments) <= family.half_widths))
    sr = np.concatenate([family.moduli[hit], [r]])
    st = np.concatenate([family.arguments[hit], [t]])
    sh = 0.5 * (1.0 - sr)
    if isinstance(phi, RectIndicator):
        return float(np.max(square_averages(phi, w, sr, st, sh)))
    focus = tuple(w.focus_angles) + tuple(getattr(phi, "focus_angles", ()) or ())
    best = 0.0
    for ri, ti in zip(sr, st):
        sq = CarlesonSquare(float(ri), float(ti))
        num = quad.integrate(sq, lambda u: np.abs(phi(u)) * w(u), spec, focus=focus, edges=w.edges)
        den = w.mass(sq)
        avg = float(np.real(num.value)) / den if den > 0 else 0.0
        best = max(best, avg)
    return best


# ---------------------------------------------------------------------------
# maximal operator and pointwise domination


def _disc_cells(depth: int = 9, base: int = 8):
    """Dyadic polar cells of the disc: rings [1-2^-n, 1-2^-(n+1)) cut into
    base*2^n sectors, with the last ring reaching the circle."""
    r_lo, r_hi, cen, half = [], [], [], []
    for n in range(depth + 1):
        a = 1.0 - 2.0 ** -n
        b = 1.0 if n == depth else 1.0 - 2.0 ** -(n + 1)
        m = base * 2 ** n
        c = (np.arange(m) + 0.5) * TWO_PI / m - math.pi
        r_lo.append(np.full(m, a))
        r_hi.append(np.full(m, b))
        cen.append(c)
        half.append(np.full(m, math.pi / m))
    r_lo, r_hi, cen, half = map(np.concatenate, (r_lo, r_hi, cen, half))
    mid = np.where(r_hi >= 1.0, 0.5 * (1.0 + r_lo), 0.5 * (r_lo + r_hi))
    return r_lo, r_hi, cen, half, mid * np.exp(1j * cen)


def _lq_of_maximal(phi_root, w: Weight, mu: DiscMeasure, alpha: float, q: float,
                   family: SquareFamily, cells, cache: dict | None = None) -> float:
    """(integral of [M_w(phi_root)]^(alpha q) dmu)^(1/q)."""
    if isinstance(mu, AtomicMeasure):
        if mu.points.size == 0:
            return 0.0
        pts = mu.points
        weights = mu.masses
    else:
        r_lo, r_hi, cen, half, pts = cells
        weights = mu.rect_masses(r_lo, r_hi, cen, half)
    vals = maximal_function(phi_root, w, pts, family, cache) ** (alpha * q)
    return float(np.sum(vals * weights)) ** (1.0 / q)


class _Root:
    """|phi|^(1/alpha) as a pointwise function."""

    def __init__(self, phi, alpha):
        self.phi, self.alpha = phi, alpha
        self.focus_angles = getattr(phi, "focus_angles", ())

    def __call__(self, z):
        return np.abs(self.phi(z)) ** (1.0 / self.alpha)


def default_probes(depth: int = 5, per_level: int = 4, gamma: float = 8.0, p: float = 2.0) -> list:
    """Probe functions: the constant 1, indicators of dyadic squares and |F_a|."""
    probes = [("const", lambda z: np.ones(np.shape(z)))]
    fam = dyadic_family(depth, per_level)
    for sq in fam.squares():
        probes.append((f"indicator(S({sq.anchor:.4g}))", RectIndicator(sq.rect)))
    for a in dyadic_family(depth, 1).anchors:
        f = kernel_test_function(complex(a), p, gamma)
        probes.append((f"kernel(a={complex(a):.4g})", lambda z, f=f: np.abs(f(z))))
    return probes


def _lp_norm(phi, w: Weight, p: float, spec=None) -> float:
    if isinstance(phi, RectIndicator):
        rect = phi.rect
        return float(w.rect_masses([rect.r_lo], [rect.r_hi], [rect.center], [rect.half_width])[0]) ** (1.0 / p)
    res = quad.integrate("disc", lambda z: np.abs(phi(z)) ** p * w(z), spec,
                         focus=tuple(w.focus_angles), edges=w.edges)
    return float(np.real(res.value)) ** (1.0 / p)


def maximal_power_operator_constant(w: Weight, p: float, q: float, alpha: float, mu: DiscMeasure,
                                    family: SquareFamily | None = None, probes=None,
                                    cell_depth: int = 7) -> ConstantEstimate:
    """Max over probes of ||[M_w(|phi|^(1/alpha))]^alpha||_{L^q_mu} / ||phi||_{L^p_w}.

    The L^q(mu) norm of the maximal function is computed exactly for atomic
    measures and by a dyadic-cell Riemann sum (exact cell masses, maximal
    function at cell centres) for densities.
    """
    if not p * alpha > 1:
        raise InvalidParameterError("need p * alpha > 1")
    _check_pq(p, q)
    family = family or dyadic_family(7, per_level=32)
    probes = probes if probes is not None else default_probes(p=p)
    cells = _disc_cells(cell_depth)
    cache: dict = {}
    vals, anchors, levels = [], [], []
    for i, (name, phi) in enumerate(probes):
        top = _lq_of_maximal(_Root(phi, alpha) if not isinstance(phi, RectIndicator) else phi,
                             w, mu, alpha, q, family, cells, cache)
        bottom = _lp_norm(phi, w, p)
        vals.append(top / bottom if bottom > 0 else 0.0)
        if isinstance(phi, RectIndicator):
            a = phi.rect.r_lo * complex(math.cos(phi.rect.center), math.sin(phi.rect.center))
        else:
            a = 0j
        anchors.append(a)
        levels.append(i)
    est = estimate_from_samples(vals, np.zeros(len(vals)), anchors,
                                note=f"maximal operator, alpha={alpha:g}, probes={len(probes)}")
    return est


def pointwise_domination_check(f: AnalyticFunction, w: Weight, s: float, grid=None,
                               family: SquareFamily | None = None) -> ConstantEstimate:
    """Max over ``grid`` of |f(z)|^s / M_w(|f|^s)(z)."""
    if not s > 0:
        raise InvalidParameterError("s must be positive")
    if grid is None:
        fam = dyadic_family(6, per_level=16)
        grid = (fam.anchors, fam.levels)
    pts, levels = grid
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    phi = _PowerAbs(f, s)
    m = maximal_function(phi, w, pts, family)
    top = np.abs(f(pts)) ** s
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(top == 0, 0.0, top / m)
    return estimate_from_samples(vals, levels, pts, note=f"pointwise domination, s={s:g}")


class _PowerAbs:
    def __init__(self, f, s):
        self.f, self.s = f, s
        self.focus_angles = getattr(f, "focus_angles", ())

    def __call__(self, z):
        return np.abs(self.f(z)) ** self.s
