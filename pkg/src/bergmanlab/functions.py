"""Analytic functions on the disc with exact derivatives.

All functions are vectorized callables on complex arrays. Closed-form
families differentiate symbolically inside the family algebra; expression
trees that grow past :data:`MAX_TREE_DEPTH` fall back to differentiation by
the Cauchy integral on the circle of radius (1 - |z|)/2.
"""

from __future__ import annotations

import cmath
import math
from functools import reduce

import numpy as np

from .estimates import ConstantEstimate, estimate_from_samples
from .geometry import InvalidParameterError, dyadic_family

MAX_TREE_DEPTH = 12
CAUCHY_NODES = 256
MAX_DEGREE = 512


def _arr(z):
    return np.asarray(z, dtype=complex)


def _out(v, z):
    return complex(v) if np.ndim(z) == 0 else v


class AnalyticFunction:
    """Base class: ``f(z)`` evaluates, ``f.derivative(k)`` differentiates."""

    label = "f"
    depth = 1
    is_zero = False

    def _eval(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        zz = _arr(z)
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.asarray(self._eval(zz), dtype=complex)
        if v.shape != zz.shape:
            v = np.broadcast_to(v, zz.shape).copy()
        return _out(v, z)

    @property
    def focus_angles(self) -> tuple:
        """Directions of boundary points where the function may blow up."""
        return ()

    def _derivative(self) -> "AnalyticFunction":
        raise NotImplementedError

    def derivative(self, k: int = 1) -> "AnalyticFunction":
        return derivative(self, k)

    def rotate(self, phi: float) -> "AnalyticFunction":
        """The function z -> f(exp(-i phi) z)."""
        return _Composed(self, cmath.exp(-1j * phi))

    def __add__(self, other):
        return Sum([self, as_function(other)])

    __radd__ = __add__

    def __sub__(self, other):
        return Sum([self, Scale(as_function(other), -1.0)])

    def __neg__(self):
        return Scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Scale(self, complex(other))
        return Product(self, as_function(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


def as_function(x) -> AnalyticFunction:
    if isinstance(x, AnalyticFunction):
        return x
    return Polynomial([complex(x)])


class Polynomial(AnalyticFunction):
    def __init__(self, coefficients, label: str | None = None):
        c = np.atleast_1d(np.asarray(coefficients, dtype=complex))
        if c.size - 1 > MAX_DEGREE:
            raise InvalidParameterError(f"polynomial degree above {MAX_DEGREE}")
        self.coefficients = c
        self.is_zero = bool(np.all(c == 0))
        self.label = label or f"poly(deg={c.size - 1})"

    def _eval(self, z):
        return np.polynomial.polynomial.polyval(z, self.coefficients)

    def _derivative(self):
        c = self.coefficients
        if c.size <= 1:
            return Polynomial([0.0])
        return Polynomial(c[1:] * np.arange(1, c.size))

    def rotate(self, phi):
        n = np.arange(self.coefficients.size)
        return Polynomial(self.coefficients * np.exp(-1j * phi * n), f"{self.label}@rot")


def monomial(n: int) -> Polynomial:
    c = np.zeros(n + 1, dtype=complex)
    c[n] = 1.0
    return Polynomial(c, f"z^{n}")


class InversePower(AnalyticFunction):
    """``coef * (1 - b z)^(-exponent)`` with |b| <= 1 (principal branch)."""

    def __init__(self, b: complex, exponent: float, coef: complex = 1.0, label: str | None = None):
        b = complex(b)
        if abs(b) > 1.0 + 1e-12:
            raise InvalidParameterError("|b| must not exceed 1")
        self.b, self.exponent, self.coef = b, float(exponent), complex(coef)
        self.is_zero = self.coef == 0
        self.label = label or f"{self.coef:g}*(1-({b:g})z)^-{exponent:g}"

    def _eval(self, z):
        w = 1.0 - self.b * z
        return self.coef * np.exp(-self.exponent * np.log(w))

    def _derivative(self):
        if self.b == 0 or self.exponent == 0:
            return Polynomial([0.0])
        return InversePower(self.b, self.exponent + 1.0, self.coef * self.exponent * self.b)

    def nth_derivative(self, k: int) -> "InversePower":
        rising = math.prod(self.exponent + j for j in range(k))
        return InversePower(self.b, self.exponent + k, self.coef * rising * self.b**k)

    @property
    def focus_angles(self):
        return (-cmath.phase(self.b),) if abs(self.b) > 0.25 else ()

    def rotate(self, phi):
        return InversePower(self.b * cmath.exp(-1j * phi), self.exponent, self.coef)


class KernelPower(InversePower):
    """``((1 - |a|^2) / (1 - conj(a) z))^exponent``."""

    def __init__(self, a: complex, exponent: float):
        a = complex(a)
        if not abs(a) < 1:
            raise InvalidParameterError("kernel anchor must lie in the open disc")
        if not exponent > 0:
            raise InvalidParameterError("kernel exponent must be positive")
        super().__init__(a.conjugate(), exponent, (1.0 - abs(a) ** 2) ** exponent,
                         label=f"kernel(a={a:.6g},e={exponent:g})")
        self.a = a

    def rotate(self, phi):
        return KernelPower(self.a * cmath.exp(1j * phi), self.exponent)


class LogKernel(AnalyticFunction):
    """``log(1 / (1 - conj(a) z))`` with |a| <= 1, principal branch."""

    def __init__(self, a: complex):
        a = complex(a)
        if abs(a) > 1.0 + 1e-12:
            raise InvalidParameterError("log kernel needs |a| <= 1")
        self.a = a
        self.is_zero = a == 0
        self.label = f"logkernel(a={a:.6g})"

    def _eval(self, z):
        return -np.log(1.0 - self.a.conjugate() * z)

    def _derivative(self):
        b = self.a.conjugate()
        return InversePower(b, 1.0, b)

    @property
    def focus_angles(self):
        return (cmath.phase(self.a),) if abs(self.a) > 0.25 else ()

    def rotate(self, phi):
        return LogKernel(self.a * cmath.exp(1j * phi))


class Scale(AnalyticFunction):
    def __init__(self, inner: AnalyticFunction, c: complex):
        self.inner, self.c = inner, complex(c)
        self.depth = inner.depth + 1
        self.is_zero = inner.is_zero or self.c == 0
        self.label = f"{self.c:g}*{inner.label}"

    def _eval(self, z):
        return self.c * self.inner._eval(z)

    def _derivative(self):
        return Scale(derivative(self.inner, 1), self.c)

    @property
    def focus_angles(self):
        return self.inner.focus_angles

    def rotate(self, phi):
        return Scale(self.inner.rotate(phi), self.c)


class Sum(AnalyticFunction):
    def __init__(self, terms):
        self.terms = [as_function(t) for t in terms]
        self.depth = 1 + max(t.depth for t in self.terms)
        self.is_zero = all(t.is_zero for t in self.terms)
        self.label = " + ".join(t.label for t in self.terms)

    def _eval(self, z):
        return reduce(np.add, (t._eval(z) for t in self.terms))

    def _derivative(self):
        return Sum([derivative(t, 1) for t in self.terms])

    @property
    def focus_angles(self):
        return tuple(a for t in self.terms for a in t.focus_angles)

    def rotate(self, phi):
        return Sum([t.rotate(phi) for t in self.terms])


class Product(AnalyticFunction):
    def __init__(self, first: AnalyticFunction, second: AnalyticFunction):
        self.first, self.second = first, second
        self.depth = 1 + max(first.depth, second.depth)
        self.is_zero = first.is_zero or second.is_zero
        self.label = f"({first.label})*({second.label})"

    def _eval(self, z):
        return self.first._eval(z) * self.second._eval(z)

    def _derivative(self):
        f, g = self.first, self.second
        return Sum([Product(derivative(f, 1), g), Product(f, derivative(g, 1))])

    @property
    def focus_angles(self):
        return self.first.focus_angles + self.second.focus_angles

    def rotate(self, phi):
        return Product(self.first.rotate(phi), self.second.rotate(phi))


class ExpOf(AnalyticFunction):
    """``exp(scale * inner(z))``."""

    def __init__(self, inner: AnalyticFunction, scale: complex = 1.0):
        self.inner, self.scale = inner, complex(scale)
        self.depth = inner.depth + 1
        self.label = f"exp({self.scale:g}*{inner.label})"

    def _eval(self, z):
        return np.exp(self.scale * self.inner._eval(z))

    def _derivative(self):
        return Product(Scale(derivative(self.inner, 1), self.scale), self)

    @property
    def focus_angles(self):
        return self.inner.focus_angles

    def rotate(self, phi):
        return ExpOf(self.inner.rotate(phi), self.scale)


class _Composed(AnalyticFunction):
    """z -> f(u z) for a unimodular u (used by the generic rotate)."""

    def __init__(self, f: AnalyticFunction, u: complex):
        self.f, self.u = f, complex(u)
        self.depth = f.depth + 1
        self.label = f"{f.label}@rot"

    def _eval(self, z):
        return self.f._eval(self.u * z)

    def _derivative(self):
        return Scale(_Composed(derivative(self.f, 1), self.u), self.u)

    @property
    def focus_angles(self):
        return tuple(a - cmath.phase(self.u) for a in self.f.focus_angles)


class CauchyDerivative(AnalyticFunction):
    """k-th derivative by the trapezoidal Cauchy integral on |w - z| = (1 - |z|)/2."""

    def __init__(self, f: AnalyticFunction, k: int, nodes: int = CAUCHY_NODES):
        self.f, self.k, self.nodes = f, int(k), int(nodes)
        self.label = f"D^{k}[{f.label}]"
        theta = 2.0 * math.pi * np.arange(self.nodes) / self.nodes
        self._circle = np.exp(1j * theta)
        self._phase = np.exp(-1j * self.k * theta)

    def _eval(self, z):
        zf = z.ravel()
        rho = 0.5 * (1.0 - np.abs(zf))
        out = np.empty(zf.size, dtype=complex)
        chunk = max(1, 200_000 // self.nodes)
        for s in range(0, zf.size, chunk):
            zz, rr = zf[s:s + chunk], rho[s:s + chunk]
            w = zz[:, None] + rr[:, None] * self._circle[None, :]
            vals = self.f(w)
            out[s:s + chunk] = (vals @ self._phase) * math.factorial(self.k) / (self.nodes * rr**self.k)
        return out.reshape(z.shape)

    def _derivative(self):
        return CauchyDerivative(self.f, self.k + 1, self.nodes)

    @property
    def focus_angles(self):
        return self.f.focus_angles


def cauchy_derivative(f: AnalyticFunction, k: int = 1, nodes: int = CAUCHY_NODES) -> CauchyDerivative:
    return CauchyDerivative(f, k, nodes)


def derivative(f: AnalyticFunction, k: int = 1) -> AnalyticFunction:
    """Closed-form k-th derivative, or a Cauchy-circle one for deep trees."""
    if k < 0:
        raise InvalidParameterError("derivative order must be nonnegative")
    if k == 0:
        return f
    if isinstance(f, InversePower):
        return f.nth_derivative(k)
    if isinstance(f, CauchyDerivative):
        return CauchyDerivative(f.f, f.k + k, f.nodes)
    out = f
    for _ in range(k):
        out = out._derivative()
        if out.depth > MAX_TREE_DEPTH:
            return CauchyDerivative(f, k)
    return out


def rotate(f: AnalyticFunction, phi: float) -> AnalyticFunction:
    return f.rotate(phi)


def point_grid(depth: int, per_level: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The origin plus the dyadic anchors up to ``depth``; returns (points, levels)."""
    fam = dyadic_family(depth, per_level)
    return np.concatenate([[0j], fam.anchors]), np.concatenate([[0], fam.levels])


def bloch_seminorm(g: AnalyticFunction, grid_depth: int = 12, per_level: int | None = 256) -> ConstantEstimate:
    """Max of (1 - |z|^2)|g'(z)| over the origin and the dyadic grid."""
    if grid_depth < 4:
        raise InvalidParameterError("grid_depth must be at least 4")
    pts, levels = point_grid(grid_depth, per_level)
    vals = (1.0 - np.abs(pts) ** 2) * np.abs(derivative(g, 1)(pts))
    return estimate_from_samples(vals, levels, pts, note="bloch seminorm on dyadic grid")


def kernel_test_function(a: complex, p: float, gamma: float) -> KernelPower:
    """((1 - |a|^2) / (1 - conj(a) z))^(gamma / p)."""
    if not p > 0 or not gamma > 0:
        raise InvalidParameterError("p and gamma must be positive")
    return KernelPower(a, gamma / p)


def normalized_test_function(a: complex, p: float, gamma: float, weight) -> Scale:
    """The kernel power scaled by weight(S(a))^(-1/p)."""
    from .geometry import carleson_square

    mass = weight.mass(carleson_square(a))
    out = Scale(kernel_test_function(a, p, gamma), mass ** (-1.0 / p))
    out.label = f"normalized_kernel(a={complex(a):.6g},p={p:g},gamma={gamma:g})"
    return out


def choose_gamma(weight, p: float, family=None, eta_grid=(0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0)) -> tuple[float, float]:
    """gamma = p (eta + 1) with the smallest eta on ``eta_grid`` whose
    kernel-integral constant is bounded. Returns (gamma, eta)."""
    from .weight_classes import kernel_mass_constant

    family = family or dyadic_family(8, per_level=16)
    for eta in eta_grid:
        est = kernel_mass_constant(weight, eta, family)
        if not est.diverging:
            return p * (eta + 1.0), eta
    eta = eta_grid[-1]
    return p * (eta + 1.0), eta


def zero() -> Polynomial:
    return Polynomial([0.0], "0")


def identity() -> Polynomial:
    return Polynomial([0.0, 1.0], "z")
