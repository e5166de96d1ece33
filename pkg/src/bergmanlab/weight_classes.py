"""Membership tests and constant estimators for weight classes.

All estimators sample a finite :class:`~bergmanlab.geometry.SquareFamily`
and return maxima (lower bounds for suprema) together with a divergence
diagnostic, see :mod:`bergmanlab.estimates`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .estimates import ConstantEstimate, estimate_from_samples
from .geometry import (
    CarlesonSquare,
    Intersection,
    InvalidParameterError,
    SquareFamily,
    StolzRegion,
    dyadic_family,
)
from .weights import (
    InvalidWeightError,
    PowerRadial,
    RadialWeight,
    StolzWeight,
    Weight,
    quotient,
)

STIFF_P = 1.05


def _square_arrays(family: SquareFamily):
    return family.moduli, np.ones(len(family)), family.arguments, family.half_widths


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where((den == 0) & (num > 0), np.inf, out)


def dhat_constant(w: Weight, family: SquareFamily | None = None) -> ConstantEstimate:
    """max over the family of w(S(a)) / w(S(a')), a' = (1 + |a|)/2 e^{i arg a}."""
    family = family or dyadic_family()
    r, one, t, h = _square_arrays(family)
    r2 = 0.5 * (1.0 + r)
    num = w.rect_masses(r, one, t, h)
    den = w.rect_masses(r2, one, t, 0.5 * (1.0 - r2))
    return estimate_from_samples(_ratio(num, den), family.levels, family.anchors,
                                 note="doubling ratio w(S(a))/w(S(a'))")


def tail_doubling_ratio(w: RadialWeight, r) -> np.ndarray:
    """Radial tail ratio w^(r) / w^((1 + r)/2)."""
    r = np.asarray(r, dtype=float)
    return np.asarray(w.tail(r)) / np.asarray(w.tail(0.5 * (1.0 + r)))


def k_top_masses(w: Weight, family: SquareFamily, K: float) -> np.ndarray:
    r, _, t, h = _square_arrays(family)
    return w.rect_masses(r, 1.0 - (1.0 - r) / K, t, h)


def dcheck_constant(w: Weight, K: float, family: SquareFamily | None = None) -> ConstantEstimate:
    """max over the family of w(S(a)) / w(T_K(a)); bounded means "holds at K"."""
    if not K > 1:
        raise InvalidParameterError("K must exceed 1")
    family = family or dyadic_family()
    r, one, t, h = _square_arrays(family)
    num = w.rect_masses(r, one, t, h)
    den = k_top_masses(w, family, K)
    return estimate_from_samples(_ratio(num, den), family.levels, family.anchors,
                                 note=f"reverse doubling ratio w(S)/w(T_K), K={K:g}")


@dataclass(frozen=True)
class ReverseDoublingExponent:
    beta0: float
    constant: float
    witness_anchor: complex
    witness_level: int
    samples: int
    level_beta: tuple = ()
    note: str = ""

    def __iter__(self):
        yield self.beta0
        yield self.constant


def dcheck_beta(w: Weight, K: float, family: SquareFamily | None = None,
                b_levels: int = 4) -> ReverseDoublingExponent:
    """Largest beta with w(S(a)) >= ((1-|a|)/(1-|b|))^beta w(S(a) minus D(0,|b|)).

    Radii |b| = 1 - (1 - |a|)/K^m, m = 1..b_levels, are sampled for every
    anchor; the implied constant is K^beta0.
    """
    if not K > 1:
        raise InvalidParameterError("K must exceed 1")
    if b_levels < 1:
        raise InvalidParameterError("b_levels must be at least 1")
    family = family or dyadic_family()
    r, one, t, h = _square_arrays(family)
    full = w.rect_masses(r, one, t, h)
    best = math.inf
    witness, level = 0j, 0
    per_level = np.full(family.levels.max() + 1, np.inf)
    for m in range(1, b_levels + 1):
        b = 1.0 - (1.0 - r) / K**m
        outer = w.rect_masses(b, one, t, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = np.log(_ratio(full, outer)) / (m * math.log(K))
        beta = np.where(np.isnan(beta), np.inf, beta)
        np.minimum.at(per_level, family.levels, beta)
        i = int(np.argmin(beta))
        if beta[i] < best:
            best, witness, level = float(beta[i]), complex(family.anchors[i]), m
    note = ""
    if not best > 0:
        note = "no positive exponent fits: reverse doubling fails on the witness"
        best = 0.0
    levels = family.level_set()
    profile = tuple(float(max(per_level[n], 0.0)) for n in levels)
    return ReverseDoublingExponent(best, K**best, witness, level, len(family) * b_levels, profile, note)


def bp_constant(w: Weight, nu: Weight, p: float, family: SquareFamily | None = None) -> ConstantEstimate:
    """max over squares of (int w nu)^(1/p) (int w^(-p'/p) nu)^(1/p') / int nu."""
    if not p > 1:
        raise InvalidParameterError("p must exceed 1")
    family = family or dyadic_family()
    p_dual = p / (p - 1.0)
    arrays = _square_arrays(family)
    a = w.times(nu).rect_masses(*arrays)
    try:
        b = w.power(-p_dual / p).times(nu).rect_masses(*arrays)
    except InvalidWeightError:
        # the dual power is not integrable near the boundary: every square has infinite dual mass
        b = np.full(len(family), np.inf)
    n = nu.rect_masses(*arrays)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = a ** (1.0 / p) * b ** (1.0 / p_dual) / n
    vals = np.where(np.isinf(b) & (a > 0), np.inf, vals)
    note = f"Bekolle-Bonami type constant, p={p:g}"
    if p < STIFF_P:
        note += "; p close to 1: the dual integral is stiff"
    return estimate_from_samples(vals, family.levels, family.anchors, note=note)


@dataclass
class BinftyReport:
    weight_label: str
    nu_label: str
    estimates: dict = field(default_factory=dict)

    @property
    def member_at(self) -> list:
        return [p for p, est in self.estimates.items() if not est.diverging]

    @property
    def member(self) -> bool:
        return bool(self.member_at)

    @property
    def diverging(self) -> bool:
        return not self.member

    def as_record(self) -> dict:
        return {
            "weight_label": self.weight_label,
            "nu_label": self.nu_label,
            "member": self.member,
            "member_at": [float(p) for p in self.member_at],
            "per_p": {f"{p:g}": est.as_record() for p, est in self.estimates.items()},
        }


def binfty_scan(w: Weight, nu: Weight, p_grid=(1.5, 2.0, 4.0, 8.0),
                family: SquareFamily | None = None) -> BinftyReport:
    """bp_constant of w / nu against nu for every p on the grid."""
    if len(p_grid) == 0:
        raise InvalidParameterError("p_grid must be nonempty")
    family = family or dyadic_family()
    phi = quotient(w, nu)
    report = BinftyReport(w.label, nu.label)
    for p in p_grid:
        report.estimates[float(p)] = bp_constant(phi, nu, float(p), family)
    return report


# ---------------------------------------------------------------------------
# Kerman-Torchinsky property


def stolz_part_masses(w: Weight, r_lo, r_hi, center, half) -> np.ndarray:
    """Mass of each polar rectangle intersected with the Stolz angle at 1."""
    r_lo = np.atleast_1d(np.asarray(r_lo, dtype=float))
    shape = r_lo.shape
    r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), shape)
    center = np.broadcast_to(np.asarray(center, dtype=float), shape)
    half = np.broadcast_to(np.asarray(half, dtype=float), shape)
    pts, ov, _ = StolzWeight._overlap_pieces(r_lo, r_hi, center, half)
    probe = StolzWeight(PowerRadial())
    if isinstance(w, RadialWeight):
        return probe._weighted_overlap(w, pts, ov) / math.pi
    if isinstance(w, StolzWeight):
        if isinstance(w.inside, RadialWeight):
            return probe._weighted_overlap(w.inside, pts, ov) / math.pi
        area = probe._weighted_overlap(PowerRadial(), pts, ov)
        return np.where(area > 0, w.inside, 0.0) if w.inside else np.zeros(shape)
    out = np.empty(shape)
    stolz = StolzRegion(1.0)
    for i in range(out.size):
        square = CarlesonSquare(float(r_lo[i]), float(center[i]))
        out[i] = float(np.real(quad.integrate(Intersection(square, stolz), w).value))
    return out


@dataclass(frozen=True)
class KTEstimate:
    delta: float
    constant: float
    residual: float
    samples: int
    witness_anchor: complex
    failed: bool
    note: str = ""

    def __iter__(self):
        yield self.delta
        yield self.constant

    def as_record(self) -> dict:
        return {"delta": self.delta, "constant": self.constant if math.isfinite(self.constant) else "inf",
                "residual": self.residual, "samples": self.samples, "failed": self.failed,
                "witness_anchor": [self.witness_anchor.real, self.witness_anchor.imag], "note": self.note}


def kt_subsets(family: SquareFamily, subsets_per_square: int = 4):
    """Sub-squares at three dyadic sub-levels and outer slices of each square.

    Returns ``(owner, kind, r_lo, center, half)`` arrays (kind 0 for
    sub-squares, 1 for slices); every subset reaches the unit circle.
    """
    if subsets_per_square < 4:
        raise InvalidParameterError("subsets_per_square must be at least 4")
    r, _, t, h = _square_arrays(family)
    idx = np.arange(len(family))
    owners, kinds, lo, ce, ha = [], [], [], [], []
    for j in (1, 2, 3):
        count = 2**j
        picks = np.unique(np.linspace(0, count - 1, min(count, subsets_per_square)).round().astype(int))
        rj = 1.0 - (1.0 - r) * 2.0**-j
        hj = h * 2.0**-j
        for i in picks:
            owners.append(idx)
            kinds.append(np.zeros(idx.size, dtype=int))
            lo.append(rj)
            ce.append(t - h + hj * (2 * i + 1))
            ha.append(hj)
    for j in range(1, subsets_per_square + 1):
        owners.append(idx)
        kinds.append(np.ones(idx.size, dtype=int))
        lo.append(1.0 - (1.0 - r) * 2.0**-j)
        ce.append(t)
        ha.append(h)
    return tuple(np.concatenate(x) for x in (owners, kinds, lo, ce, ha))


def kt_estimate(w: Weight, nu: Weight, family: SquareFamily | None = None,
                subsets_per_square: int = 4, include_stolz_sets: bool = False) -> KTEstimate:
    """Fit nu(E)/nu(S) <= C (w(E)/w(S))^delta over sampled subsets E of S.

    For each subset shape the least-squares slope of log nu-ratios on log
    w-ratios is fitted; delta is the smallest of these slopes (clamped to
    [0, 1]), so the power law is an envelope for every shape, and C is the
    smallest constant making the bound hold on every sample. A subset with w(E) = 0 < nu(E) makes the property fail (delta = 0).
    """
    family = family or dyadic_family(8)
    owner, kind, lo, ce, ha = kt_subsets(family, subsets_per_square)
    r, one, t, h = _square_arrays(family)
    w_s = w.rect_masses(r, one, t, h)
    nu_s = nu.rect_masses(r, one, t, h)
    w_e = w.rect_masses(lo, np.ones_like(lo), ce, ha)
    nu_e = nu.rect_masses(lo, np.ones_like(lo), ce, ha)
    if include_stolz_sets:
        owner = np.concatenate([owner, np.arange(len(family))])
        kind = np.concatenate([kind, np.full(len(family), 2)])
        w_e = np.concatenate([w_e, stolz_part_masses(w, r, one, t, h)])
        nu_e = np.concatenate([nu_e, stolz_part_masses(nu, r, one, t, h)])
    x_ratio = w_e / w_s[owner]
    y_ratio = nu_e / nu_s[owner]
    fail = (x_ratio <= 0) & (y_ratio > 0)
    if np.any(fail):
        i = int(np.flatnonzero(fail)[0])
        return KTEstimate(0.0, math.inf, math.inf, int(x_ratio.size), complex(family.anchors[owner[i]]), True,
                          "subset with zero w-mass and positive nu-mass")
    ok = (x_ratio > 0) & (y_ratio > 0) & (x_ratio < 1.0 - 1e-12)
    x, y, kinds = np.log(x_ratio[ok]), np.log(y_ratio[ok]), kind[ok]
    fits = []
    for k in np.unique(kinds):
        sel = kinds == k
        if sel.sum() >= 2 and np.ptp(x[sel]) > 0:
            slope, intercept = np.polyfit(x[sel], y[sel], 1)
            fits.append((slope, intercept, sel))
    if not fits:
        return KTEstimate(1.0, 1.0, 0.0, int(x_ratio.size), 0j, False, "degenerate sample")
    slope, intercept, sel = min(fits, key=lambda f: f[0])
    delta = float(np.clip(slope, 0.0, 1.0))
    gaps = y - delta * x
    k = int(np.argmax(gaps))
    constant = float(math.exp(gaps[k]))
    residual = float(max(np.max(np.abs(y[f[2]] - (f[1] + f[0] * x[f[2]]))) for f in fits))
    witness = complex(family.anchors[owner[np.flatnonzero(ok)[k]]])
    return KTEstimate(delta, constant, residual, int(x_ratio.size), witness, False)


# ---------------------------------------------------------------------------
# kernel integral condition


def kernel_integral(w: Weight, a: complex, eta: float, spec: quad.QuadratureSpec | None = None) -> quad.IntegralResult:
    """Integral of w(z) / |1 - conj(a) z|^eta over the disc."""
    a = complex(a)
    b = a.conjugate()

    def integrand(z):
        return w(z) * np.abs(1.0 - b * z) ** (-eta)

    focus = tuple(w.focus_angles) + ((math.atan2(a.imag, a.real), 0.0),)
    return quad.integrate("disc", integrand, spec or quad.QuadratureSpec(relative_tolerance=1e-7),
                          focus=focus, edges=w.edges)


def kernel_mass_constant(w: Weight, eta: float, family: SquareFamily | None = None,
                        spec: quad.QuadratureSpec | None = None) -> ConstantEstimate:
    """max over anchors of (1-|a|)^eta / w(S(a)) * int w / |1 - conj(a) z|^eta dA."""
    if not eta > 0:
        raise InvalidParameterError("eta must be positive")
    family = family or dyadic_family(8, per_level=16)
    masses = w.square_masses(family)
    if w.is_radial:
        uniq, inverse = np.unique(np.round(family.moduli, 15), return_inverse=True)
        ints = np.array([kernel_integral(w, m, eta, spec).value for m in uniq])
        integrals = ints[np.asarray(inverse).ravel()]
    else:
        integrals = np.array([kernel_integral(w, a, eta, spec).value for a in family.anchors])
    vals = (1.0 - family.moduli) ** eta / masses * np.real(integrals)
    return estimate_from_samples(vals, family.levels, family.anchors,
                                 note=f"kernel integral condition, eta={eta:g}")


# ---------------------------------------------------------------------------
# composite verdicts


@dataclass(frozen=True)
class ClassVerdict:
    dhat: ConstantEstimate
    dcheck: ConstantEstimate
    K: float

    @property
    def in_dhat(self) -> bool:
        return not self.dhat.diverging

    @property
    def in_dcheck(self) -> bool:
        return not self.dcheck.diverging

    @property
    def in_d(self) -> bool:
        return self.in_dhat and self.in_dcheck


def classify(w: Weight, K: float = 2.0, family: SquareFamily | None = None) -> ClassVerdict:
    family = family or dyadic_family()
    return ClassVerdict(dhat_constant(w, family), dcheck_constant(w, K, family), K)


def dcheck_holds_somewhere(w: Weight, Ks=(2.0, 4.0, 8.0, 16.0), family: SquareFamily | None = None):
    """First K in ``Ks`` at which the reverse doubling ratio stays bounded."""
    family = family or dyadic_family()
    for K in Ks:
        est = dcheck_constant(w, K, family)
        if not est.diverging:
            return K, est
    return None, est
