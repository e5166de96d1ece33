"""Disc regions: Carleson squares, K-tops, pseudo-hyperbolic discs, Stolz regions.

Points of the unit disc are plain Python/numpy complex numbers. Every region
exposes a vectorized ``contains`` and, when it is a polar rectangle, a
``rect`` attribute that the quadrature and the weight mass formulas consume.
Angular tests are always taken modulo 2*pi along the shorter arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi


class InvalidAnchorError(ValueError):
    """Raised for Carleson-square anchors outside 0 < |a| < 1."""


class InvalidParameterError(ValueError):
    """Raised when a numeric parameter violates its documented range."""


class InvalidRegionError(ValueError):
    """Raised for empty or malformed regions."""


def wrap_angle(theta):
    """Map angles into [-pi, pi)."""
    return (np.asarray(theta, dtype=float) + math.pi) % TWO_PI - math.pi


def angular_distance(theta1, theta2):
    """Length of the shorter arc between two angles."""
    return np.abs(wrap_angle(np.asarray(theta1) - np.asarray(theta2)))


def check_interior(z) -> complex:
    z = complex(z)
    if not abs(z) < 1.0:
        raise InvalidParameterError(f"point {z!r} is not in the open unit disc")
    return z


def pseudo_distance(z1, z2):
    """Pseudo-hyperbolic distance |(z1 - z2) / (1 - conj(z1) z2)|."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    out = np.abs((z1 - z2) / (1.0 - np.conj(z1) * z2))
    return float(out) if out.ndim == 0 else out


def disc_automorphism(a, z):
    """phi_a(z) = (a - z) / (1 - conj(a) z)."""
    a = complex(a)
    z = np.asarray(z, dtype=complex)
    return (a - z) / (1.0 - np.conj(a) * z)


@dataclass(frozen=True)
class PolarRect:
    """{r e^{it}: r_lo <= r < r_hi, |t - center| <= half_width (mod 2 pi)}.

    ``half_width >= pi`` means the full circle.
    """

    r_lo: float
    r_hi: float
    center: float
    half_width: float

    def __post_init__(self):
        if not (0.0 <= self.r_lo < self.r_hi <= 1.0) or not self.half_width > 0.0:
            raise InvalidRegionError(f"empty or malformed polar rectangle {self}")
        object.__setattr__(self, "center", float(wrap_angle(self.center)))

    @property
    def full_circle(self) -> bool:
        return self.half_width >= math.pi

    @property
    def angular_width(self) -> float:
        return TWO_PI if self.full_circle else 2.0 * self.half_width

    @property
    def area(self) -> float:
        """Normalized area, dA = r dr dt / pi."""
        return self.angular_width * (self.r_hi**2 - self.r_lo**2) / TWO_PI

    @property
    def rect(self) -> "PolarRect":
        return self

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        inside = (r >= self.r_lo) & (r < self.r_hi)
        if not self.full_circle:
            inside &= angular_distance(np.angle(z), self.center) <= self.half_width
        return inside

    def intersect(self, other: "PolarRect") -> "PolarRect | None":
        """Intersection with another polar rectangle (None when empty).

        Angular intersection assumes both arcs are shorter than pi, which is
        the case for every Carleson square.
        """
        r_lo = max(self.r_lo, other.r_lo)
        r_hi = min(self.r_hi, other.r_hi)
        if r_lo >= r_hi:
            return None
        if self.full_circle:
            return PolarRect(r_lo, r_hi, other.center, other.half_width)
        if other.full_circle:
            return PolarRect(r_lo, r_hi, self.center, self.half_width)
        offset = float(wrap_angle(other.center - self.center))
        lo = max(-self.half_width, offset - other.half_width)
        hi = min(self.half_width, offset + other.half_width)
        if lo >= hi:
            return None
        return PolarRect(r_lo, r_hi, self.center + 0.5 * (lo + hi), 0.5 * (hi - lo))


WHOLE_DISC = PolarRect(0.0, 1.0, 0.0, math.pi)


@dataclass(frozen=True)
class CarlesonSquare:
    """S(a) = {z : |z| >= |a|, |arg z - arg a| <= (1 - |a|)/2}."""

    anchor_modulus: float
    anchor_argument: float

    def __post_init__(self):
        if not (0.0 < self.anchor_modulus < 1.0):
            raise InvalidAnchorError(
                f"Carleson squares need 0 < |a| < 1, got |a| = {self.anchor_modulus}"
            )
        object.__setattr__(self, "anchor_argument", float(wrap_angle(self.anchor_argument)))

    @property
    def anchor(self) -> complex:
        return self.anchor_modulus * complex(math.cos(self.anchor_argument),
                                             math.sin(self.anchor_argument))

    @property
    def half_width(self) -> float:
        return 0.5 * (1.0 - self.anchor_modulus)

    @property
    def rect(self) -> PolarRect:
        return PolarRect(self.anchor_modulus, 1.0, self.anchor_argument, self.half_width)

    @property
    def area(self) -> float:
        r = self.anchor_modulus
        return (1.0 - r) * (1.0 - r * r) / TWO_PI

    @property
    def level(self) -> float:
        """Continuous dyadic level n with 1 - |a| = 2^-n."""
        return -math.log2(1.0 - self.anchor_modulus)

    def contains(self, z):
        return self.rect.contains(z)

    def outer_slice(self, t: float) -> PolarRect:
        """S(a) minus the disc D(0, t)."""
        return PolarRect(max(self.anchor_modulus, t), 1.0, self.anchor_argument, self.half_width)

    def parent_step(self) -> "CarlesonSquare":
        """The square anchored at (1 + |a|)/2 on the same ray."""
        return CarlesonSquare(0.5 * (1.0 + self.anchor_modulus), self.anchor_argument)


def carleson_square(a) -> CarlesonSquare:
    a = complex(a)
    r = abs(a)
    if not (0.0 < r < 1.0):
        raise InvalidAnchorError(f"Carleson squares need 0 < |a| < 1, got a = {a!r}")
    return CarlesonSquare(r, math.atan2(a.imag, a.real))


@dataclass(frozen=True)
class KTop:
    """T_K(a): the part of S(a) with |a| <= r < 1 - (1 - |a|)/K."""

    parent: CarlesonSquare
    K: float

    def __post_init__(self):
        if not self.K > 1.0:
            raise InvalidParameterError(f"K-tops need K > 1, got K = {self.K}")

    @property
    def r_hi(self) -> float:
        return 1.0 - (1.0 - self.parent.anchor_modulus) / self.K

    @property
    def rect(self) -> PolarRect:
        p = self.parent
        return PolarRect(p.anchor_modulus, self.r_hi, p.anchor_argument, p.half_width)

    def complement(self) -> PolarRect:
        """S(a) minus T_K(a)."""
        p = self.parent
        return PolarRect(self.r_hi, 1.0, p.anchor_argument, p.half_width)

    def contains(self, z):
        return self.rect.contains(z)


def k_top(square: CarlesonSquare, K: float) -> KTop:
    return KTop(square, float(K))


@dataclass(frozen=True)
class PseudoDisc:
    """Delta(z, r) = {u : rho(u, z) < r}; a Euclidean disc inside the unit disc."""

    center: complex
    radius: float

    def __post_init__(self):
        check_interior(self.center)
        if not (0.0 < self.radius < 1.0):
            raise InvalidParameterError(f"pseudo-disc radius must lie in (0, 1), got {self.radius}")

    @property
    def euclidean_center(self) -> complex:
        z, r = complex(self.center), self.radius
        return z * (1.0 - r * r) / (1.0 - r * r * abs(z) ** 2)

    @property
    def euclidean_radius(self) -> float:
        z, r = complex(self.center), self.radius
        return r * (1.0 - abs(z) ** 2) / (1.0 - r * r * abs(z) ** 2)

    @property
    def area(self) -> float:
        return self.euclidean_radius**2

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return np.abs((z - self.center) / (1.0 - np.conj(self.center) * z)) < self.radius


@dataclass(frozen=True)
class StolzRegion:
    """Gamma(zeta) = {z : |arg zeta - arg z| < (1 - |z|)/2} for unimodular zeta."""

    boundary_point: complex

    def __post_init__(self):
        if abs(abs(complex(self.boundary_point)) - 1.0) > 1e-12:
            raise InvalidParameterError("Stolz regions are attached to unimodular points")

    @property
    def direction(self) -> float:
        z = complex(self.boundary_point)
        return math.atan2(z.imag, z.real)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        return (r < 1.0) & (angular_distance(np.angle(z), self.direction) < 0.5 * (1.0 - r))


@dataclass(frozen=True)
class Difference:
    """Set difference ``outer`` minus ``inner``."""

    outer: object
    inner: object

    def contains(self, z):
        return contains(self.outer, z) & ~contains(self.inner, z)


@dataclass(frozen=True)
class Intersection:
    first: object
    second: object

    def contains(self, z):
        return contains(self.first, z) & contains(self.second, z)


def contains(region, z):
    """Exact membership of ``z`` (scalar or array) in ``region``."""
    out = region.contains(z)
    return bool(out) if np.ndim(out) == 0 else out


def polar_rect_of(region) -> PolarRect | None:
    """The polar rectangle describing ``region`` exactly, if there is one."""
    if isinstance(region, PolarRect):
        return region
    if isinstance(region, (CarlesonSquare, KTop)):
        return region.rect
    if isinstance(region, Difference):
        outer, inner = polar_rect_of(region.outer), polar_rect_of(region.inner)
        if outer is not None and inner is not None and _same_arc(outer, inner):
            if inner.r_lo <= outer.r_lo and inner.r_hi < outer.r_hi:
                return PolarRect(max(inner.r_hi, outer.r_lo), outer.r_hi, outer.center, outer.half_width)
            if inner.r_hi >= outer.r_hi and inner.r_lo > outer.r_lo:
                return PolarRect(outer.r_lo, min(inner.r_lo, outer.r_hi), outer.center, outer.half_width)
    if isinstance(region, Intersection):
        first, second = polar_rect_of(region.first), polar_rect_of(region.second)
        if first is not None and second is not None:
            return first.intersect(second)
    return None


def _same_arc(a: PolarRect, b: PolarRect) -> bool:
    if a.full_circle or b.full_circle:
        return a.full_circle and b.full_circle
    return abs(a.half_width - b.half_width) < 1e-15 and float(angular_distance(a.center, b.center)) < 1e-15


@dataclass(frozen=True)
class SquareFamily:
    """Finite index set of Carleson squares, grouped by dyadic level."""

    depth: int
    anchors: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)

    def __post_init__(self):
        r = np.abs(self.anchors)
        if self.anchors.size == 0 or np.any((r <= 0.0) | (r >= 1.0)):
            raise InvalidAnchorError("family anchors must satisfy 0 < |a| < 1")

    def __len__(self) -> int:
        return int(self.anchors.size)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.anchors)

    @property
    def arguments(self) -> np.ndarray:
        return np.angle(self.anchors)

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (1.0 - self.moduli)

    def squares(self) -> list[CarlesonSquare]:
        return [CarlesonSquare(float(r), float(t)) for r, t in zip(self.moduli, self.arguments)]

    def square(self, index: int) -> CarlesonSquare:
        return CarlesonSquare(float(self.moduli[index]), float(self.arguments[index]))

    def restrict(self, mask) -> "SquareFamily":
        mask = np.asarray(mask, dtype=bool)
        return SquareFamily(self.depth, self.anchors[mask], self.levels[mask])

    def level_set(self) -> np.ndarray:
        return np.unique(self.levels)


def dyadic_family(depth: int = 12, per_level: int | None = None,
                  first_level: int = 1) -> SquareFamily:
    """Anchors with |a| = 1 - 2^-n, n = first_level..depth.

    Level n carries 2^(n+2) equispaced arguments starting at 0, or at most
    ``per_level`` of them (equispaced, still starting at 0) when given.
    """
    if depth < first_level or first_level < 1:
        raise InvalidParameterError(f"need 1 <= first_level <= depth, got {first_level}, {depth}")
    anchors, levels = [], []
    for n in range(first_level, depth + 1):
        count = 2 ** (n + 2)
        if per_level is not None:
            count = min(count, int(per_level))
        args = TWO_PI * np.arange(count) / count
        anchors.append((1.0 - 2.0**-n) * np.exp(1j * args))
        levels.append(np.full(count, n))
    return SquareFamily(depth, np.concatenate(anchors), np.concatenate(levels))


def family_from_anchors(anchors: Iterable[complex]) -> SquareFamily:
    anchors = np.asarray(list(anchors), dtype=complex)
    levels = np.rint(-np.log2(1.0 - np.abs(anchors))).astype(int)
    return SquareFamily(int(levels.max()), anchors, levels)


def squares_containing(z, family: SquareFamily) -> list[CarlesonSquare]:
    """Family members containing z, plus the self-anchored square S(z) when z != 0."""
    z = check_interior(z)
    r, t = abs(z), math.atan2(z.imag, z.real)
    hit = (family.moduli <= r) & (angular_distance(t, family.arguments) <= family.half_widths)
    out = [family.square(i) for i in np.flatnonzero(hit)]
    if r > 0.0:
        out.append(CarlesonSquare(r, t))
    return out
