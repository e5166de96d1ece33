"""The integration operator T_g, its resolvent and the resolvent-set classifier."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .carleson import VanishingProfile, profile_vanishes
from .estimates import ConstantEstimate, estimate_from_samples
from .functions import AnalyticFunction, as_function, bloch_seminorm, derivative
from .geometry import InvalidParameterError, SquareFamily, dyadic_family
from .norms import LPReport, bergman_norm, default_suite, lp_ratio_suite
from .weights import InvalidWeightError, Weight, constant, exponential_twist, tilde_average

SEGMENT_SPEC = quad.QuadratureSpec(relative_tolerance=1e-13)


def _check_lambda(lam) -> complex:
    lam = complex(lam)
    if lam == 0:
        raise InvalidParameterError("lambda must be nonzero")
    return lam


def apply_tg(g: AnalyticFunction, f: AnalyticFunction, z, spec: quad.QuadratureSpec | None = None):
    """T_g f(z): integral of f g' along the segment [0, z] (vectorized over z)."""
    dg = derivative(g, 1)
    res = quad.integrate_segment(z, lambda u: f(u) * dg(u), spec or SEGMENT_SPEC)
    return res.value


def tg_bounded_constant(g: AnalyticFunction, w: Weight, p: float, q: float,
                        family: SquareFamily | None = None, check_weight: bool = False) -> ConstantEstimate:
    """Max over anchors of (1-|a|)|g'(a)| w(S(a))^(1/q - 1/p), for p <= q.

    With ``check_weight`` the weight is first scanned against the constant
    weight and a warning is issued when the scan diverges.
    """
    if not (p > 0 and q > 0) or q < p:
        raise InvalidParameterError(f"need 0 < p <= q, got p={p}, q={q}")
    if check_weight:
        _warn_weight(w)
    family = family or dyadic_family(12)
    r = family.moduli
    vals = (1.0 - r) * np.abs(derivative(g, 1)(family.anchors))
    expo = 1.0 / q - 1.0 / p
    if expo != 0.0:
        vals = vals * np.asarray(w.square_masses(family), dtype=float) ** expo
    return estimate_from_samples(vals, family.levels, family.anchors,
                                 note=f"T_g boundedness, p={p:g}, q={q:g}")


def tg_compact_profile(g: AnalyticFunction, w: Weight, p: float, q: float, levels: int = 12,
                       threshold: float = 0.1) -> VanishingProfile:
    """Per-level maxima of the boundedness quantity, with a vanishing verdict."""
    if not (p > 0 and q > 0) or q < p:
        raise InvalidParameterError(f"need 0 < p <= q, got p={p}, q={q}")
    fam = dyadic_family(levels)
    vals = (1.0 - fam.moduli) * np.abs(derivative(g, 1)(fam.anchors))
    expo = 1.0 / q - 1.0 / p
    if expo != 0.0:
        vals = vals * np.asarray(w.square_masses(fam), dtype=float) ** expo
    maxima = np.zeros(levels)
    wit = np.zeros(levels, dtype=complex)
    for n in range(1, levels + 1):
        sel = np.flatnonzero(fam.levels == n)
        i = sel[int(np.argmax(vals[sel]))]
        maxima[n - 1], wit[n - 1] = vals[i], fam.anchors[i]
    return VanishingProfile(np.arange(1, levels + 1), maxima, wit,
                            profile_vanishes(maxima, threshold), threshold)


def volterra_index(p: float, q: float) -> float:
    """s with 1/s = 1/q - 1/p, for q < p."""
    if not (p > 0 and q > 0) or q >= p:
        raise InvalidParameterError(f"need 0 < q < p, got p={p}, q={q}")
    return p * q / (p - q)


def tg_qlessp_norm(g: AnalyticFunction, w: Weight, p: float, q: float,
                   spec: quad.QuadratureSpec | None = None) -> float:
    """Norm of g in A^s_w with 1/s = 1/q - 1/p (finite means bounded and compact)."""
    return bergman_norm(g, w, volterra_index(p, q), spec)


# ---------------------------------------------------------------------------
# resolvent


def resolvent_apply(lam: complex, g: AnalyticFunction, h: AnalyticFunction, z,
                    spec: quad.QuadratureSpec | None = None):
    """R h(z) = e^{g(z)/lam} (h(0) + integral over [0, z] of e^{-g/lam} h')."""
    lam = _check_lambda(lam)
    g, h = as_function(g), as_function(h)
    dh = derivative(h, 1)
    inv = 1.0 / lam
    g0 = complex(g(0j))
    # subtracting g(0) in both exponentials keeps magnitudes moderate
    integral = quad.integrate_segment(z, lambda u: np.exp(-(g(u) - g0) * inv) * dh(u),
                                      spec or SEGMENT_SPEC).value
    return np.exp((np.asarray(g(z)) - g0) * inv) * (complex(h(0j)) + integral)


class ResolventSolution(AnalyticFunction):
    """f = R h / lam, the solution of lam f - T_g f = h."""

    def __init__(self, lam: complex, g: AnalyticFunction, h: AnalyticFunction,
                 spec: quad.QuadratureSpec | None = None):
        self.lam = _check_lambda(lam)
        self.g, self.h = as_function(g), as_function(h)
        self.spec = spec
        self.depth = max(self.g.depth, self.h.depth) + 2
        self.label = f"resolvent(lambda={self.lam:g},{self.g.label},{self.h.label})"

    def _eval(self, z):
        return np.asarray(resolvent_apply(self.lam, self.g, self.h, z, self.spec)) / self.lam

    def _derivative(self):
        return _ResolventDerivative(self)

    @property
    def focus_angles(self):
        return tuple(self.g.focus_angles) + tuple(self.h.focus_angles)


class _ResolventDerivative(AnalyticFunction):
    """f' = (h' + f g') / lam, read off the differentiated equation."""

    def __init__(self, sol: ResolventSolution):
        self.sol = sol
        self.dg, self.dh = derivative(sol.g, 1), derivative(sol.h, 1)
        self.depth = sol.depth + 1
        self.label = f"d/dz {sol.label}"

    def _eval(self, z):
        return (self.dh(z) + self.sol(z) * self.dg(z)) / self.sol.lam

    @property
    def focus_angles(self):
        return self.sol.focus_angles


def resolvent_solution(lam: complex, g: AnalyticFunction, h: AnalyticFunction,
                       spec: quad.QuadratureSpec | None = None) -> ResolventSolution:
    return ResolventSolution(lam, g, h, spec)


# ---------------------------------------------------------------------------
# classifier


PLAUSIBLE = "in-resolvent-plausible"
FAILS = "equivalence-fails"
INCONCLUSIVE = "inconclusive"


@dataclass
class ResolventVerdict:
    lam: complex
    spread: float
    verdict: str
    twisted_weight_label: str
    diverging: bool = False
    report: LPReport | None = None
    surrogate_member: bool | None = None
    warnings: list = field(default_factory=list)

    def as_record(self) -> dict:
        spread = self.spread if math.isfinite(self.spread) else "inf"
        return {"lambda": [self.lam.real, self.lam.imag], "spread": spread, "verdict": self.verdict,
                "diverging": self.diverging, "twisted_weight": self.twisted_weight_label,
                "surrogate_member": self.surrogate_member, "warnings": list(self.warnings)}


def _warn_weight(w: Weight) -> list:
    from .weight_classes import binfty_scan

    msgs = []
    scan = binfty_scan(w, constant(1.0), p_grid=(2.0,), family=dyadic_family(8, per_level=32))
    if not scan.member:
        msgs.append(f"weight {w.label} fails the B_infinity scan against the constant weight")
    for m in msgs:
        warnings.warn(m, RuntimeWarning, stacklevel=3)
    return msgs


def verdict_of(report: LPReport, spread_threshold: float = 1e3) -> str:
    if report.diverging:
        return FAILS
    if report.spread < spread_threshold:
        return PLAUSIBLE
    return INCONCLUSIVE


def resolvent_classify(lam: complex, g: AnalyticFunction, w: Weight, p: float, suite=None, *,
                       family_depth: int = 8, gamma: float | None = None, threads: int = 1,
                       spread_threshold: float = 1e3, check_preconditions: bool = False,
                       surrogate: bool = False, spec: quad.QuadratureSpec | None = None) -> ResolventVerdict:
    """Classify lambda via the LP equivalence for the twisted weight w exp(p Re(g/lam)).

    The verdict is "in-resolvent-plausible" when the suite spread is below
    ``spread_threshold`` and does not grow with the suite level,
    "equivalence-fails" when it diverges, and "inconclusive" otherwise.
    """
    lam = _check_lambda(lam)
    g = as_function(g)
    notes = []
    if check_preconditions:
        if bloch_seminorm(g, 10, 64).diverging:
            notes.append("symbol g does not look like a Bloch function")
            warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
        notes += _warn_weight(w)
    try:
        twisted = exponential_twist(w, g, lam, p)
    except InvalidWeightError as exc:
        return ResolventVerdict(lam, math.inf, FAILS, f"twist({w.label})", True, None, None,
                                notes + [f"twisted weight not integrable: {exc}"])
    if suite is None:
        suite = default_suite(family_depth, p, gamma, radial=False)
    report = lp_ratio_suite(twisted, p, 1, suite, spec=spec, threads=threads, suite_name="default")
    member = None
    if surrogate:
        from .weight_classes import binfty_scan

        member = binfty_scan(tilde_average(twisted), constant(1.0), p_grid=(2.0,),
                             family=dyadic_family(8, per_level=32)).member
    return ResolventVerdict(lam, report.spread, verdict_of(report, spread_threshold), twisted.label,
                            report.diverging, report, member, notes)


def resolvent_scan(g: AnalyticFunction, w: Weight, p: float, re_range, im_range, resolution: int,
                   **kwargs) -> list[ResolventVerdict]:
    """Classify every lambda on a rectangular grid (lambda = 0 is skipped)."""
    out = []
    for re in np.linspace(re_range[0], re_range[1], resolution):
        for im in np.linspace(im_range[0], im_range[1], resolution):
            lam = complex(re, im)
            if lam == 0:
                continue
            out.append(resolvent_classify(lam, g, w, p, **kwargs))
    return out
