"""Bergman norms, Littlewood-Paley functionals and equivalence-ratio suites.

Norm equivalences are checked empirically: a ratio is computed for every
member of a declared finite suite of test functions, and the spread
(max / min) is reported together with its growth as deeper kernel functions
are added.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import quadrature as quad
from .estimates import ConstantEstimate, estimate_from_samples, growth_slope, DIVERGENCE_SLOPE
from .functions import (AnalyticFunction, KernelPower, LogKernel, derivative, monomial,
                        point_grid, Polynomial)
from .geometry import InvalidParameterError, PseudoDisc, dyadic_family
from .weights import Weight, tilde_average

NORM_SPEC = quad.QuadratureSpec(relative_tolerance=1e-8)


class SuiteEntry(NamedTuple):
    """A suite member with the refinement level it belongs to (0 = base)."""

    function: AnalyticFunction
    level: int = 0
    label: str = ""


def _entries(suite) -> list[SuiteEntry]:
    out = []
    for item in suite:
        if isinstance(item, SuiteEntry):
            out.append(item if item.label else item._replace(label=repr(item.function)))
        else:
            out.append(SuiteEntry(item, 0, repr(item)))
    if not out:
        raise InvalidParameterError("suite must be nonempty")
    return out


def _focus(*objs) -> tuple:
    foci = []
    for obj in objs:
        foci.extend(getattr(obj, "focus_angles", ()) or ())
    return tuple(foci)


# ---------------------------------------------------------------------------
# single-function functionals


def bergman_integral(f: AnalyticFunction, w: Weight, p: float,
                     spec: quad.QuadratureSpec | None = None) -> quad.IntegralResult:
    """Integral of |f|^p w over the disc (the p-th power of the norm)."""
    if not p > 0:
        raise InvalidParameterError("p must be positive")

    def integrand(z):
        return np.abs(f(z)) ** p * w(z)

    return quad.integrate("disc", integrand, spec or NORM_SPEC, focus=_focus(w, f), edges=w.edges)


def bergman_norm(f: AnalyticFunction, w: Weight, p: float,
                 spec: quad.QuadratureSpec | None = None) -> float:
    """Weighted Bergman norm (integral of |f|^p w dA)^(1/p)."""
    res = bergman_integral(f, w, p, spec)
    return float(np.real(res.value)) ** (1.0 / p)


def lp_integral(f: AnalyticFunction, w: Weight, p: float, k: int,
                spec: quad.QuadratureSpec | None = None) -> tuple[float, quad.IntegralResult]:
    """p-th power of the Littlewood-Paley functional and the area-integral result."""
    if not p > 0:
        raise InvalidParameterError("p must be positive")
    if int(k) != k or k < 1:
        raise InvalidParameterError("k must be a positive integer")
    k = int(k)
    dk = derivative(f, k)

    def integrand(z):
        return np.abs(dk(z)) ** p * (1.0 - np.abs(z)) ** (k * p) * w(z)

    res = quad.integrate("disc", integrand, spec or NORM_SPEC, focus=_focus(w, f), edges=w.edges)
    origin = sum(abs(derivative(f, j)(0j) if j else f(0j)) ** p for j in range(k))
    return float(np.real(res.value)) + float(origin), res


def lp_functional(f: AnalyticFunction, w: Weight, p: float, k: int,
                  spec: quad.QuadratureSpec | None = None) -> float:
    """Littlewood-Paley functional, returned as its p-th root.

    Examples
    --------
    >>> from bergmanlab.weights import constant
    >>> round(lp_functional(monomial(1), constant(), 2.0, 2), 12)
    1.0
    """
    total, _ = lp_integral(f, w, p, k, spec)
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# reports


@dataclass
class LPReport:
    """Per-function ratio table for one equivalence.

    ``ratio`` is ``left / right`` with both sides as p-th powers; ``spread``
    is ``max_ratio / min_ratio``. ``max_inverse`` is the largest
    ``right / left`` and summarizes the one-sided estimate.
    """

    p: float
    k: int
    weight: str
    left_name: str
    right_name: str
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    suite: str = ""

    def _ratios(self) -> np.ndarray:
        return np.array([r["ratio"] for r in self.records], dtype=float)

    @property
    def min_ratio(self) -> float:
        return float(np.min(self._ratios())) if self.records else math.nan

    @property
    def max_ratio(self) -> float:
        return float(np.max(self._ratios())) if self.records else math.nan

    @property
    def spread(self) -> float:
        lo, hi = self.min_ratio, self.max_ratio
        if not self.records:
            return math.nan
        return math.inf if lo <= 0 else hi / lo

    @property
    def max_inverse(self) -> float:
        r = self._ratios()
        return float(np.max(1.0 / r)) if r.size else math.nan

    @property
    def nonconverged(self) -> int:
        return sum(1 for r in self.records if not r["converged"])

    def level_spreads(self) -> tuple[np.ndarray, np.ndarray]:
        """Spread of the sub-suite with levels <= L, for each level L present."""
        levels = np.array([r["level"] for r in self.records])
        ratios = self._ratios()
        uniq = np.unique(levels)
        out = []
        for lv in uniq:
            sel = ratios[levels <= lv]
            out.append(np.max(sel) / np.min(sel) if np.min(sel) > 0 else math.inf)
        return uniq, np.array(out)

    def level_inverse_max(self) -> tuple[np.ndarray, np.ndarray]:
        levels = np.array([r["level"] for r in self.records])
        inv = 1.0 / self._ratios()
        uniq = np.unique(levels)
        return uniq, np.array([np.max(inv[levels <= lv]) for lv in uniq])

    @property
    def spread_slope(self) -> float:
        return growth_slope(self.level_spreads()[1])

    @property
    def inverse_slope(self) -> float:
        return growth_slope(self.level_inverse_max()[1])

    @property
    def diverging(self) -> bool:
        return not np.isfinite(self.spread) or self.spread_slope > DIVERGENCE_SLOPE

    @property
    def one_sided_diverging(self) -> bool:
        return not np.isfinite(self.max_inverse) or self.inverse_slope > DIVERGENCE_SLOPE

    def as_record(self) -> dict:
        def num(x):
            x = float(x)
            return x if math.isfinite(x) else ("inf" if x > 0 else "nan")

        return {
            "p": self.p, "k": self.k, "weight": self.weight, "suite": self.suite,
            "left": self.left_name, "right": self.right_name,
            "min_ratio": num(self.min_ratio), "max_ratio": num(self.max_ratio),
            "spread": num(self.spread), "spread_root": num(self.spread ** (1.0 / self.p)),
            "max_inverse": num(self.max_inverse),
            "spread_slope": num(self.spread_slope), "diverging": self.diverging,
            "one_sided_diverging": self.one_sided_diverging,
            "nonconverged": self.nonconverged, "skipped": list(self.skipped),
            "records": [{k: (num(v) if isinstance(v, float) else v) for k, v in r.items()}
                        for r in self.records],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["label", "level", "left", "right", "ratio", "ratio_root", "converged"]
        writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore")
        writer.writeheader()
        for r in self.records:
            writer.writerow(r)
        return buf.getvalue()


def _record(entry: SuiteEntry, left: float, right: float, p: float, converged: bool) -> dict:
    ratio = left / right
    return {"label": entry.label, "level": int(entry.level), "left": left, "right": right,
            "ratio": ratio, "ratio_root": ratio ** (1.0 / p), "converged": bool(converged)}


def _is_zero(f: AnalyticFunction) -> bool:
    if isinstance(f, Polynomial):
        return not np.any(f.coefficients)
    probe = np.array([0.0, 0.3 + 0.2j, -0.5j, 0.7])
    return not np.any(np.abs(f(probe)) > 0)


def _map(fn, items, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def lp_ratio_suite(w: Weight, p: float, k: int, suite: Iterable, *,
                   spec: quad.QuadratureSpec | None = None, threads: int = 1,
                   suite_name: str = "custom") -> LPReport:
    """Ratios (Bergman norm)^p / (LP functional)^p over ``suite``."""
    entries = _entries(suite)
    report = LPReport(p, int(k), w.label, "bergman", "littlewood_paley", suite=suite_name)

    def work(entry):
        if _is_zero(entry.function):
            return entry, None
        b = bergman_integral(entry.function, w, p, spec)
        lp, res = lp_integral(entry.function, w, p, k, spec)
        return entry, (float(np.real(b.value)), lp, b.converged and res.converged)

    for entry, out in _map(work, entries, threads):
        if out is None:
            report.skipped.append(f"{entry.label}: zero function")
            continue
        report.records.append(_record(entry, out[0], out[1], p, out[2]))
    return report


@dataclass
class TildeReport:
    """Three-way comparison: norm with w, norm with its average, LP with the average."""

    norm_vs_tilde: LPReport
    tilde_vs_lp: LPReport

    @property
    def spreads(self) -> tuple[float, float]:
        return self.norm_vs_tilde.spread, self.tilde_vs_lp.spread

    @property
    def diverging(self) -> bool:
        return self.norm_vs_tilde.diverging or self.tilde_vs_lp.diverging

    def as_record(self) -> dict:
        return {"norm_vs_tilde": self.norm_vs_tilde.as_record(),
                "tilde_vs_lp": self.tilde_vs_lp.as_record()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["label", "level", "norm_w", "norm_tilde", "lp_tilde",
                         "ratio_norms", "ratio_tilde_lp"])
        for a, b in zip(self.norm_vs_tilde.records, self.tilde_vs_lp.records):
            writer.writerow([a["label"], a["level"], a["left"], a["right"], b["right"],
                             a["ratio"], b["ratio"]])
        return buf.getvalue()


def tilde_equivalence_suite(w: Weight, p: float, k: int, suite: Iterable, *,
                            spec: quad.QuadratureSpec | None = None, threads: int = 1,
                            suite_name: str = "custom", tilde: Weight | None = None) -> TildeReport:
    """Compare the norm with ``w``, the norm with the averaged weight, and the
    LP functional with the averaged weight over ``suite``."""
    entries = _entries(suite)
    tw = tilde if tilde is not None else tilde_average(w)
    first = LPReport(p, int(k), w.label, "bergman", "bergman_tilde", suite=suite_name)
    second = LPReport(p, int(k), tw.label, "bergman_tilde", "littlewood_paley_tilde", suite=suite_name)

    def work(entry):
        if _is_zero(entry.function):
            return entry, None
        bw = bergman_integral(entry.function, w, p, spec)
        bt = bergman_integral(entry.function, tw, p, spec)
        lt, res = lp_integral(entry.function, tw, p, k, spec)
        ok = bw.converged and bt.converged
        return entry, (float(np.real(bw.value)), float(np.real(bt.value)), lt, ok, ok and res.converged)

    for entry, out in _map(work, entries, threads):
        if out is None:
            first.skipped.append(f"{entry.label}: zero function")
            second.skipped.append(f"{entry.label}: zero function")
            continue
        first.records.append(_record(entry, out[0], out[1], p, out[3]))
        second.records.append(_record(entry, out[1], out[2], p, out[4]))
    return TildeReport(first, second)


# ---------------------------------------------------------------------------
# suites


def default_suite(depth: int = 8, p: float = 2.0, gamma: float | None = None, *,
                  per_level: int | None = 8, max_degree: int = 32,
                  radial: bool = False) -> list[SuiteEntry]:
    """Constants, monomials, kernel powers over dyadic anchors and log kernels.

    Kernel powers have exponent gamma / p. With ``radial=True`` a single
    argument per level is used, which loses nothing for rotation-invariant
    weights.
    """
    if gamma is None:
        gamma = 4.0 * p
    out = [SuiteEntry(Polynomial([1.0]), 0, "const")]
    out += [SuiteEntry(monomial(n), 0, f"z^{n}") for n in range(1, max_degree + 1)]
    fam = dyadic_family(depth, 1 if radial else per_level)
    for a, lv in zip(fam.anchors, fam.levels):
        out.append(SuiteEntry(KernelPower(complex(a), gamma / p), int(lv),
                              f"kernel(a={a.real:.6g}{a.imag:+.6g}j,e={gamma / p:g})"))
    for n in range(1, depth + 1):
        r = 1.0 - 2.0 ** (-n)
        out.append(SuiteEntry(LogKernel(r), n, f"log_kernel(a={r:g})"))
    out.append(SuiteEntry(LogKernel(1.0), 0, "log_kernel(a=1)"))
    return out


# ---------------------------------------------------------------------------
# local estimate


def subharmonic_bound_check(f: AnalyticFunction, p: float, k: int, s: float, grid=None,
                            spec: quad.QuadratureSpec | None = None) -> ConstantEstimate:
    """Max over ``grid`` of |f^(k)(z)|^p (1-|z|)^(2+kp) / integral of |f|^p over Delta(z, s).

    ``grid`` is a (points, levels) pair; the default is the origin plus dyadic
    anchors to depth 6 with 16 points per level.
    """
    if not 0.0 < s < 1.0:
        raise InvalidParameterError("s must lie in (0, 1)")
    if not p > 0:
        raise InvalidParameterError("p must be positive")
    if grid is None:
        grid = point_grid(6, 16)
    pts, levels = grid
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    levels = np.atleast_1d(np.asarray(levels))
    dk = derivative(f, k)
    num = np.abs(dk(pts)) ** p * (1.0 - np.abs(pts)) ** (2.0 + k * p)
    vals = np.zeros(pts.size)
    spec = spec or quad.QuadratureSpec(relative_tolerance=1e-9)
    for i, z in enumerate(pts):
        if num[i] == 0.0:
            continue
        res = quad.integrate(PseudoDisc(complex(z), s), lambda u: np.abs(f(u)) ** p, spec)
        den = float(np.real(res.value))
        vals[i] = num[i] / den if den > 0 else math.inf
    return estimate_from_samples(vals, levels, pts, note=f"local estimate, s={s:g}, k={k}")
