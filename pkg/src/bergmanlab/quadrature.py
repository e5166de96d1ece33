"""Area and line quadrature on the unit disc.

Area integrals use dA = r dr dt / pi. Polar regions are cut into annuli that
are geometrically graded toward the unit circle (annulus j of a region whose
inner radius is r0 covers 1 - d 2^-j <= r < 1 - d 2^-(j+1), d = 1 - r0).
Inside an annulus the angular range is graded toward *focus angles*, the
directions where an integrand concentrates or is singular; an angular focus
may carry an algebraic exponent, in which case its innermost cell uses a
Gauss-Jacobi rule. Every cell is evaluated with a tensor Gauss rule and with
its half-order companion; the difference is the (heuristic) error estimate
and drives 2x2 cell splitting. Cells whose nodes see different values of the
integrand's ``edges`` classifier are subdivided to a fixed depth and the rest
is charged to the error estimate. The mass beyond the last annulus is
extrapolated from the ratio of consecutive annulus masses.

Integrands are callables taking a complex ndarray and returning a real or
complex ndarray of the same shape. They may carry ``focus_angles`` (iterable
of angles or ``(angle, exponent)`` pairs) and ``edges`` (callable returning a
label array) attributes; explicit keyword arguments take precedence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy.special import roots_jacobi

from .geometry import (
    WHOLE_DISC,
    Difference,
    Intersection,
    InvalidParameterError,
    InvalidRegionError,
    PolarRect,
    PseudoDisc,
    StolzRegion,
    check_interior,
    polar_rect_of,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    relative_tolerance: float = 1e-8
    max_annuli: int = 40
    nodes_per_cell: int = 32
    boundary_exponent_hint: float | None = None
    subdivision_depth: int = 6
    absolute_tolerance: float = 1e-300

    def __post_init__(self):
        if not self.relative_tolerance > 0:
            raise InvalidParameterError("relative_tolerance must be positive")
        if self.nodes_per_cell < 4:
            raise InvalidParameterError("nodes_per_cell must be at least 4")
        if self.max_annuli < 4:
            raise InvalidParameterError("max_annuli must be at least 4")
        if self.boundary_exponent_hint is not None and not self.boundary_exponent_hint > -1:
            raise InvalidParameterError("boundary_exponent_hint must exceed -1")

    @property
    def order(self) -> int:
        """1-D Gauss order of the fine tensor rule in each cell."""
        return max(2, self.nodes_per_cell // 2)

    def with_tolerance(self, tol: float) -> "QuadratureSpec":
        return QuadratureSpec(tol, self.max_annuli, self.nodes_per_cell,
                              self.boundary_exponent_hint, self.subdivision_depth,
                              self.absolute_tolerance)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class IntegralResult:
    value: complex | float
    error_estimate: float
    cells_used: int
    converged: bool

    def __float__(self):
        return float(np.real(self.value))


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi_left(n: int, kappa: float):
    """Nodes/weights on [-1, 1] for the weight (1 + x)^kappa."""
    x, w = roots_jacobi(n, 0.0, kappa)
    return np.asarray(x), np.asarray(w)


def _focus_list(integrand, focus) -> list[tuple[float, float]]:
    if focus is None:
        focus = getattr(integrand, "focus_angles", ()) or ()
    out = []
    for item in focus:
        if isinstance(item, tuple):
            angle, expo = float(item[0]), float(item[1])
        else:
            angle, expo = float(item), 0.0
        out.append((angle, expo))
    # merge duplicates, keeping the most singular exponent
    merged: dict[float, float] = {}
    for angle, expo in out:
        key = round(math.remainder(angle, TWO_PI), 14)
        merged[key] = min(expo, merged.get(key, expo))
    return sorted(merged.items())


# ---------------------------------------------------------------------------
# angular layout


@dataclass
class _AngularLayout:
    t0: np.ndarray
    t1: np.ndarray
    kappa: np.ndarray      # nan for regular cells
    toward_left: np.ndarray  # Jacobi cells: singular end is t0


def _graded(phi: float, s: float, width: float, kappa: float, depth_extra: int, kmax: int):
    """Cells between phi and phi + s, graded toward phi."""
    length = abs(s)
    k = int(np.clip(math.ceil(math.log2(max(length / max(width, 1e-300), 1.0))) + depth_extra, 1, kmax))
    marks = phi + s * 2.0 ** -np.arange(k + 1)
    a, b = marks[1:], marks[:-1]
    t0, t1 = np.minimum(a, b), np.maximum(a, b)
    inner0, inner1 = min(phi, marks[-1]), max(phi, marks[-1])
    t0 = np.append(t0, inner0)
    t1 = np.append(t1, inner1)
    kap = np.full(t0.size, np.nan)
    left = np.zeros(t0.size, dtype=bool)
    if kappa != 0.0:
        kap[-1] = kappa
        left[-1] = s > 0
    return t0, t1, kap, left


def angular_layout(center: float, half_width: float, foci: list[tuple[float, float]],
                   width: float, depth_extra: int = 3, kmax: int = 40) -> _AngularLayout:
    full = half_width >= math.pi
    if full:
        if foci:
            angles = sorted(a % TWO_PI for a, _ in foci)
            gaps = [(angles[(i + 1) % len(angles)] - angles[i]) % TWO_PI or TWO_PI
                    for i in range(len(angles))]
            i = int(np.argmax(gaps))
            lo = angles[i] + 0.5 * gaps[i]
        else:
            lo = -math.pi
        hi = lo + TWO_PI
    else:
        lo, hi = center - half_width, center + half_width
    inside = []
    for a, e in foci:
        shifted = lo + (a - lo) % TWO_PI
        if lo <= shifted <= hi:
            # graded cells are anchored at the focus as given, so that nodes
            # next to it keep full relative precision in angle
            inside.append((shifted, e, math.remainder(a, TWO_PI)))
    inside.sort()
    bounds = [(lo, None, lo)] + inside + [(hi, None, hi)]
    cols = ([], [], [], [])
    for (u, eu, ou), (v, ev, ov) in zip(bounds[:-1], bounds[1:]):
        if v - u <= 1e-15:
            continue
        pieces = []
        if eu is not None and ev is not None:
            m = 0.5 * (u + v)
            pieces.append(_graded(ou, m - u, width, eu, depth_extra, kmax))
            pieces.append(_graded(ov, m - v, width, ev, depth_extra, kmax))
        elif eu is not None:
            pieces.append(_graded(ou, v - u, width, eu, depth_extra, kmax))
        elif ev is not None:
            pieces.append(_graded(ov, u - v, width, ev, depth_extra, kmax))
        else:
            n = max(1, math.ceil((v - u) / (0.5 * math.pi)))
            marks = np.linspace(u, v, n + 1)
            pieces.append((marks[:-1], marks[1:], np.full(n, np.nan), np.zeros(n, dtype=bool)))
        for piece in pieces:
            for col, arr in zip(cols, piece):
                col.append(arr)
    return _AngularLayout(*(np.concatenate(c) for c in cols))


# ---------------------------------------------------------------------------
# cell evaluation


def _regular_nodes(center, r0, r1, t0, t1, n):
    x, w = gauss_legendre(n)
    hr, mr = 0.5 * (r1 - r0), 0.5 * (r1 + r0)
    ht, mt = 0.5 * (t1 - t0), 0.5 * (t1 + t0)
    r = mr[:, None] + hr[:, None] * x[None, :]
    t = mt[:, None] + ht[:, None] * x[None, :]
    z = center + r[:, :, None] * np.exp(1j * t)[:, None, :]
    wt = (hr[:, None] * w[None, :] * r)[:, :, None] * (ht[:, None] * w[None, :])[:, None, :] / math.pi
    return z, wt, None


def _jacobi_nodes(center, r0, r1, t0, t1, n, kappa, toward_left):
    xr, wr = gauss_legendre(n)
    xj, wj = gauss_jacobi_left(n, float(kappa))
    hr, mr = 0.5 * (r1 - r0), 0.5 * (r1 + r0)
    ht = 0.5 * (t1 - t0)
    r = mr[:, None] + hr[:, None] * xr[None, :]
    # singular end at t0 when toward_left else at t1
    sign = np.where(toward_left, 1.0, -1.0)
    anchor = np.where(toward_left, t0, t1)
    t = anchor[:, None] + sign[:, None] * ht[:, None] * (1.0 + xj[None, :])
    dist = ht[:, None] * (1.0 + xj[None, :])
    z = center + r[:, :, None] * np.exp(1j * t)[:, None, :]
    # integral of f = sum wj * f / dist^kappa * ht^(1) * (ht)^kappa ... written via dist
    ang_w = wj[None, :] * ht[:, None] ** (kappa + 1.0) / dist**kappa
    wt = (hr[:, None] * wr[None, :] * r)[:, :, None] * ang_w[:, None, :] / math.pi
    return z, wt, None


@dataclass
class _Cells:
    r0: np.ndarray
    r1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    kappa: np.ndarray
    left: np.ndarray
    depth: np.ndarray
    group: np.ndarray  # annulus index


def _evaluate(integrand, edges, center, cells: _Cells, order: int):
    """Fine/coarse values per cell and a straddle flag."""
    n_hi, n_lo = order, max(1, order // 2)
    hi = np.zeros(cells.r0.size, dtype=complex)
    lo = np.zeros(cells.r0.size, dtype=complex)
    straddle = np.zeros(cells.r0.size, dtype=bool)
    regular = np.isnan(cells.kappa)
    batches = []
    if regular.any():
        idx = np.flatnonzero(regular)
        zh, wh, _ = _regular_nodes(center, cells.r0[idx], cells.r1[idx], cells.t0[idx], cells.t1[idx], n_hi)
        zl, wl, _ = _regular_nodes(center, cells.r0[idx], cells.r1[idx], cells.t0[idx], cells.t1[idx], n_lo)
        batches.append((idx, zh, wh, zl, wl, True))
    for kap in np.unique(cells.kappa[~regular]):
        idx = np.flatnonzero(cells.kappa == kap)
        args = (center, cells.r0[idx], cells.r1[idx], cells.t0[idx], cells.t1[idx])
        zh, wh, _ = _jacobi_nodes(*args, n_hi, kap, cells.left[idx])
        zl, wl, _ = _jacobi_nodes(*args, n_lo, kap, cells.left[idx])
        batches.append((idx, zh, wh, zl, wl, False))
    if not batches:
        return hi, lo, straddle
    flat = np.concatenate([np.concatenate([b[1].ravel(), b[3].ravel()]) for b in batches])
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = np.asarray(integrand(flat))
    if vals.shape != flat.shape:
        vals = np.broadcast_to(vals, flat.shape)
    labels = np.asarray(edges(flat)) if edges is not None else None
    pos = 0
    for idx, zh, wh, zl, wl, reg in batches:
        nh, nl = zh.size, zl.size
        vh = vals[pos:pos + nh].reshape(zh.shape)
        vl = vals[pos + nh:pos + nh + nl].reshape(zl.shape)
        with np.errstate(invalid="ignore"):
            hi[idx] = np.sum(np.where(wh != 0, vh * wh, 0.0), axis=(1, 2))
            lo[idx] = np.sum(np.where(wl != 0, vl * wl, 0.0), axis=(1, 2))
        if labels is not None and reg:
            lab = labels[pos:pos + nh].reshape(zh.shape[0], -1)
            straddle[idx] = np.any(lab != lab[:, :1], axis=1)
        pos += nh + nl
    return hi, lo, straddle


def _split(cells: _Cells, mask: np.ndarray) -> _Cells:
    """Replace masked regular cells by their 2x2 children."""
    keep = ~mask
    idx = np.flatnonzero(mask)
    rm = 0.5 * (cells.r0[idx] + cells.r1[idx])
    tm = 0.5 * (cells.t0[idx] + cells.t1[idx])
    r0 = np.concatenate([cells.r0[idx], cells.r0[idx], rm, rm])
    r1 = np.concatenate([rm, rm, cells.r1[idx], cells.r1[idx]])
    t0 = np.concatenate([cells.t0[idx], tm, cells.t0[idx], tm])
    t1 = np.concatenate([tm, cells.t1[idx], tm, cells.t1[idx]])
    rep = lambda a: np.concatenate([a[keep]] + [a[idx]] * 4)  # noqa: E731
    return _Cells(
        np.concatenate([cells.r0[keep], r0]),
        np.concatenate([cells.r1[keep], r1]),
        np.concatenate([cells.t0[keep], t0]),
        np.concatenate([cells.t1[keep], t1]),
        rep(cells.kappa), rep(cells.left),
        np.concatenate([cells.depth[keep]] + [cells.depth[idx] + 1] * 4),
        rep(cells.group),
    )


def _adaptive_cells(integrand, edges, center, cells: _Cells, spec: QuadratureSpec,
                    scale_hint: float = 0.0, max_rounds: int = 8):
    """Evaluate cells, splitting inaccurate or straddling ones.

    Returns per-group sums of (value, error) and the number of leaves.
    """
    groups = int(cells.group.max()) + 1 if cells.group.size else 0
    value = np.zeros(groups, dtype=complex)
    error = np.zeros(groups)
    leaves = 0
    tol = spec.relative_tolerance
    pending = cells
    accepted_scale = abs(scale_hint)
    for round_ in range(max_rounds + spec.subdivision_depth + 1):
        if pending.r0.size == 0:
            break
        hi, lo, straddle = _evaluate(integrand, edges, center, pending, spec.order)
        err = np.abs(hi - lo)
        if not np.all(np.isfinite(hi)):
            bad = ~np.isfinite(hi)
            np.add.at(value, pending.group[bad], hi[bad])
            error[:] = np.inf
            return value, error, leaves + pending.r0.size
        group_val = np.zeros(groups, dtype=complex)
        np.add.at(group_val, pending.group, hi)
        scale = np.maximum(np.abs(value + group_val), accepted_scale)
        budget = tol * scale[pending.group] / max(1, pending.r0.size) ** 0.5
        regular = np.isnan(pending.kappa)
        can_split_err = regular & (pending.depth < max_rounds)
        can_split_edge = regular & (pending.depth < spec.subdivision_depth)
        split = (can_split_err & (err > np.maximum(budget, spec.absolute_tolerance))) | (can_split_edge & straddle)
        done = ~split
        np.add.at(value, pending.group[done], hi[done])
        leaf_err = err[done]
        np.add.at(error, pending.group[done], leaf_err)
        leaves += int(done.sum())
        if not split.any():
            break
        sub = _Cells(*(getattr(pending, f)[split] for f in
                       ("r0", "r1", "t0", "t1", "kappa", "left", "depth", "group")))
        pending = _split(sub, np.ones(sub.r0.size, dtype=bool))
    return value, error, leaves


# ---------------------------------------------------------------------------
# polar rectangles


def _annulus_marks(r_lo: float, r_hi: float, start: int, count: int) -> np.ndarray:
    d = 1.0 - r_lo
    j = np.arange(start, start + count + 1)
    marks = 1.0 - d * 2.0 ** -j.astype(float)
    return np.minimum(marks, r_hi)


def _build_cells(rect: PolarRect, foci, marks: np.ndarray, group_offset: int) -> _Cells:
    cols = {k: [] for k in ("r0", "r1", "t0", "t1", "kappa", "left", "group")}
    for g, (ra, rb) in enumerate(zip(marks[:-1], marks[1:])):
        if rb <= ra:
            continue
        layout = angular_layout(rect.center, rect.half_width, foci, rb - ra)
        n = layout.t0.size
        cols["r0"].append(np.full(n, ra))
        cols["r1"].append(np.full(n, rb))
        cols["t0"].append(layout.t0)
        cols["t1"].append(layout.t1)
        cols["kappa"].append(layout.kappa)
        cols["left"].append(layout.toward_left)
        cols["group"].append(np.full(n, g + group_offset))
    if not cols["r0"]:
        empty = np.zeros(0)
        return _Cells(empty, empty, empty, empty, empty, np.zeros(0, bool), np.zeros(0, int), np.zeros(0, int))
    arrs = {k: np.concatenate(v) for k, v in cols.items()}
    return _Cells(arrs["r0"], arrs["r1"], arrs["t0"], arrs["t1"], arrs["kappa"], arrs["left"],
                  np.zeros(arrs["r0"].size, dtype=int), arrs["group"])


def wynn_epsilon(partial_sums) -> tuple[complex, float]:
    """Limit of a sequence by Wynn's epsilon algorithm.

    Returns the estimate from the deepest even column and the distance to the
    estimate one column earlier, used as its error.
    """
    col_prev = np.zeros(len(partial_sums) + 1, dtype=complex)
    col = np.asarray(partial_sums, dtype=complex).copy()
    estimates = [col[-1]]
    m = 0
    while col.size > 1:
        diff = col[1:] - col[:-1]
        if np.any(diff == 0):
            break
        nxt = col_prev[1:col.size] + 1.0 / diff
        col_prev, col = col, nxt
        m += 1
        if m % 2 == 0:
            estimates.append(col[-1])
    if len(estimates) == 1:
        return estimates[0], 0.0 if len(partial_sums) > 1 and partial_sums[-1] == partial_sums[-2] else math.inf
    return estimates[-1], float(abs(estimates[-1] - estimates[-2]))


def geometric_tail(masses: np.ndarray, window: int = 10):
    """Remainder of a series of decaying annulus masses.

    The partial sums are accelerated with the epsilon algorithm, which is exact
    for finite sums of geometric sequences (the typical profile of graded
    annuli under power-type boundary behaviour). Returns
    ``(tail, tail_error, ok)``; ``ok`` is False when the masses do not decay.
    """
    masses = np.asarray(masses, dtype=complex)
    if masses.size < 4:
        return 0.0, math.inf, False
    last = masses[-3:]
    if np.all(last == 0):
        return 0.0, 0.0, True
    mags = np.abs(masses[-4:])
    if not np.all(mags[1:] < mags[:-1]):
        return 0.0, math.inf, False
    all_sums = np.cumsum(masses)
    sums = all_sums[-window:]
    limit, err = wynn_epsilon(sums)
    if all_sums.size > window:
        # the in-table error can be optimistic for mixed rates; require stability under one more annulus
        previous, _ = wynn_epsilon(all_sums[-window - 1:-1])
        err = max(err, abs(limit - previous))
    tail = limit - sums[-1]
    # the tail of a decaying positive-type series cannot exceed a geometric bound
    q = mags[-1] / mags[-2]
    bound = mags[-1] * q / (1.0 - q)
    if not np.isfinite(limit) or abs(tail) > 10.0 * bound + 1e-300:
        tail = masses[-1] * q / (1.0 - q)
        err = abs(tail)
    return complex(tail), float(err + 1e-15 * abs(tail)), True


def _integrate_rect(rect: PolarRect, integrand, spec: QuadratureSpec, foci, edges) -> IntegralResult:
    tol = spec.relative_tolerance
    if rect.r_hi < 1.0:
        d = 1.0 - rect.r_lo
        count = max(1, math.ceil(math.log2(d / (1.0 - rect.r_hi))))
        marks = _annulus_marks(rect.r_lo, rect.r_hi, 0, count)
        marks[-1] = rect.r_hi
        cells = _build_cells(rect, foci, marks, 0)
        value, error, leaves = _adaptive_cells(integrand, edges, 0.0, cells, spec)
        total = complex(value.sum())
        err = float(error.sum())
        ok = np.isfinite(err) and err <= max(tol * abs(total), spec.absolute_tolerance) * 10
        return IntegralResult(_realify(total, integrand), err, leaves, bool(ok))

    hint = spec.boundary_exponent_hint
    min_annuli = 8 if hint is None else int(np.clip(math.ceil(6.0 / (hint + 1.0)), 6, 16))
    batch = 6
    masses = np.zeros(0, dtype=complex)
    errors = np.zeros(0)
    leaves = 0
    start = 0
    tail, tail_err, ok = 0.0, math.inf, False
    while start < spec.max_annuli:
        count = min(batch, spec.max_annuli - start)
        marks = _annulus_marks(rect.r_lo, 1.0, start, count)
        cells = _build_cells(rect, foci, marks, 0)
        scale_hint = abs(masses.sum()) if masses.size else 0.0
        value, error, n = _adaptive_cells(integrand, edges, 0.0, cells, spec, scale_hint)
        masses = np.concatenate([masses, value])
        errors = np.concatenate([errors, error])
        leaves += n
        start += count
        if not np.all(np.isfinite(errors)) or not np.all(np.isfinite(masses)):
            total = complex(np.sum(masses))
            return IntegralResult(_realify(total, integrand), math.inf, leaves, False)
        if start < min_annuli:
            continue
        tail, tail_err, ok = geometric_tail(masses)
        partial = complex(masses.sum())
        total = partial + tail
        budget = max(tol * abs(total), spec.absolute_tolerance)
        if ok and tail_err + errors.sum() <= budget:
            break
    partial = complex(masses.sum())
    if not ok:
        return IntegralResult(_realify(partial, integrand), math.inf, leaves, False)
    total = partial + tail
    err = float(errors.sum() + tail_err)
    converged = err <= max(tol * abs(total), spec.absolute_tolerance) * 10
    return IntegralResult(_realify(total, integrand), err, leaves, bool(converged))


def _realify(value: complex, integrand):
    if getattr(integrand, "is_complex", False):
        return complex(value)
    if value.imag == 0.0 or abs(value.imag) <= 1e-14 * abs(value.real):
        return float(value.real)
    return complex(value)


def _integrate_pseudodisc(disc: PseudoDisc, integrand, spec: QuadratureSpec, edges) -> IntegralResult:
    c, R = disc.euclidean_center, disc.euclidean_radius
    marks = np.array([0.0, 0.5 * R, R])
    t = np.linspace(-math.pi, math.pi, 5)
    r0 = np.repeat(marks[:-1], 4)
    r1 = np.repeat(marks[1:], 4)
    t0 = np.tile(t[:-1], 2)
    t1 = np.tile(t[1:], 2)
    n = r0.size
    cells = _Cells(r0, r1, t0, t1, np.full(n, np.nan), np.zeros(n, bool), np.zeros(n, int), np.zeros(n, int))
    value, error, leaves = _adaptive_cells(integrand, edges, c, cells, spec)
    total = complex(value.sum())
    err = float(error.sum())
    ok = np.isfinite(err) and err <= max(spec.relative_tolerance * abs(total), spec.absolute_tolerance) * 10
    return IntegralResult(_realify(total, integrand), err, leaves, bool(ok))


class _Masked:
    """integrand * indicator(region), with the region boundary as an edge."""

    def __init__(self, integrand, region, base_edges):
        self.integrand = integrand
        self.region = region
        self.base_edges = base_edges
        self.is_complex = getattr(integrand, "is_complex", False)

    def __call__(self, z):
        inside = self.region.contains(z)
        vals = np.asarray(self.integrand(z))
        return np.where(inside, vals, 0.0)

    def edges(self, z):
        lab = np.asarray(self.region.contains(z), dtype=int)
        if self.base_edges is not None:
            lab = lab * 1000 + np.asarray(self.base_edges(z), dtype=int)
        return lab


def integrate(region, integrand: Callable, spec: QuadratureSpec | None = None, *,
              focus: Iterable | None = None, edges: Callable | None = None) -> IntegralResult:
    """Integral of ``integrand`` over ``region`` against dA = dx dy / pi.

    ``region`` may be a PolarRect, CarlesonSquare, KTop, PseudoDisc,
    StolzRegion, Difference, Intersection or the string ``"disc"``.
    Non-convergence is reported through ``IntegralResult.converged``.
    """
    spec = spec or DEFAULT_SPEC
    foci = _focus_list(integrand, focus)
    if edges is None:
        edges = getattr(integrand, "edges", None)
    if isinstance(region, str):
        if region != "disc":
            raise InvalidRegionError(f"unknown region {region!r}")
        region = WHOLE_DISC
    if isinstance(region, PseudoDisc):
        return _integrate_pseudodisc(region, integrand, spec, edges)
    rect = polar_rect_of(region)
    if rect is not None:
        return _integrate_rect(rect, integrand, spec, foci, edges)
    if isinstance(region, (Difference, Intersection)):
        base = region.outer if isinstance(region, Difference) else region.first
        if isinstance(region, Intersection) and polar_rect_of(base) is None:
            base = region.second
        masked = _Masked(integrand, region, edges)
        if isinstance(base, PseudoDisc):
            return _integrate_pseudodisc(base, masked, spec, masked.edges)
        rect = polar_rect_of(base)
        if rect is None:
            raise InvalidRegionError(f"cannot integrate over {region!r}")
        extra = []
        for part in (getattr(region, "inner", None), getattr(region, "second", None),
                     getattr(region, "first", None)):
            if isinstance(part, StolzRegion):
                extra.append((part.direction, 0.0))
        return _integrate_rect(rect, masked, spec, foci + extra, masked.edges)
    if isinstance(region, StolzRegion):
        masked = _Masked(integrand, region, edges)
        return _integrate_rect(WHOLE_DISC, masked, spec, foci + [(region.direction, 0.0)], masked.edges)
    raise InvalidRegionError(f"cannot integrate over {region!r}")


# ---------------------------------------------------------------------------
# batched fixed rules


def rect_arrays(rects) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    r_lo = np.array([r.r_lo for r in rects], dtype=float)
    r_hi = np.array([r.r_hi for r in rects], dtype=float)
    center = np.array([r.center for r in rects], dtype=float)
    half = np.array([min(r.half_width, math.pi) for r in rects], dtype=float)
    return r_lo, r_hi, center, half


def integrate_rects(integrand: Callable, r_lo, r_hi, center, half_width, *,
                    annuli: int = 14, angular_cells: int = 2, order: int = 10,
                    chunk: int = 4096):
    """Integrals over many polar rectangles with one fixed graded rule.

    Each rectangle gets ``annuli`` annuli graded toward r = 1 (relative to its
    own inner radius) and ``angular_cells`` equal angular cells; rectangles
    reaching the unit circle receive a geometric tail estimate. Returns
    ``(values, errors)``; errors compare the fine and half-order rules plus
    the tail uncertainty.
    """
    r_lo = np.atleast_1d(np.asarray(r_lo, dtype=float))
    r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), r_lo.shape)
    center = np.broadcast_to(np.asarray(center, dtype=float), r_lo.shape)
    half = np.broadcast_to(np.asarray(half_width, dtype=float), r_lo.shape)
    values = np.zeros(r_lo.size, dtype=complex)
    errors = np.zeros(r_lo.size)
    for start in range(0, r_lo.size, chunk):
        sl = slice(start, start + chunk)
        v, e = _integrate_rects_chunk(integrand, r_lo[sl], r_hi[sl], center[sl], half[sl],
                                      annuli, angular_cells, order)
        values[sl] = v
        errors[sl] = e
    if not getattr(integrand, "is_complex", False) and np.all(np.abs(values.imag) <= 1e-14 * np.abs(values.real) + 1e-300):
        return values.real, errors
    return values, errors


def _integrate_rects_chunk(integrand, r_lo, r_hi, center, half, annuli, angular_cells, order):
    m = r_lo.size
    d = 1.0 - r_lo
    j = np.arange(annuli + 1, dtype=float)
    marks = 1.0 - d[:, None] * 2.0 ** -j[None, :]
    marks = np.minimum(marks, r_hi[:, None])
    ra, rb = marks[:, :-1], marks[:, 1:]                       # (m, A)
    edges = np.linspace(-1.0, 1.0, angular_cells + 1)
    ta = center[:, None] + half[:, None] * edges[None, :-1]    # (m, C)
    tb = center[:, None] + half[:, None] * edges[None, 1:]
    out = {}
    for n in (order, max(1, order // 2)):
        x, w = gauss_legendre(n)
        hr, mr = 0.5 * (rb - ra), 0.5 * (rb + ra)
        r = mr[..., None] + hr[..., None] * x                    # (m, A, n)
        ht, mt = 0.5 * (tb - ta), 0.5 * (tb + ta)
        t = mt[..., None] + ht[..., None] * x                    # (m, C, n)
        z = r[:, :, None, :, None] * np.exp(1j * t)[:, None, :, None, :]   # (m, A, C, n, n)
        wr = hr[..., None] * w * r                               # (m, A, n)
        wt = ht[..., None] * w                                   # (m, C, n)
        wgt = wr[:, :, None, :, None] * wt[:, None, :, None, :] / math.pi
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = np.asarray(integrand(z.ravel())).reshape(z.shape)
            out[n] = np.sum(np.where(wgt != 0, vals * wgt, 0.0), axis=(2, 3, 4))  # (m, A)
    fine, coarse = out[order], out[max(1, order // 2)]
    values = fine.sum(axis=1)
    errors = np.abs(fine - coarse).sum(axis=1)
    reach = r_hi >= 1.0
    if np.any(reach):
        m1, m2, m3 = fine[:, -1], fine[:, -2], fine[:, -3]
        with np.errstate(divide="ignore", invalid="ignore"):
            q1 = np.where(m2 != 0, m1 / m2, 0.0)
            q2 = np.where(m3 != 0, m2 / m3, 0.0)
            good = reach & (np.abs(q1) < 1.0)
            tail = np.where(good, m1 * q1 / (1.0 - q1), 0.0)
            tail_err = np.where(good, np.abs(tail) * np.abs(q1 - q2) / (1.0 - np.abs(q1)), 0.0)
        bad = reach & ~good & (m1 != 0)
        values = values + tail
        errors = errors + tail_err + np.where(bad, np.inf, 0.0)
    return values, errors


# ---------------------------------------------------------------------------
# one-dimensional rules


def integrate_interval(fn: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
                       graded_to_one: bool | None = None) -> IntegralResult:
    """Adaptive integral of a real function over [a, b], b <= 1.

    With ``b == 1`` (or ``graded_to_one``) the panels are graded toward 1 and
    the remainder is extrapolated geometrically, so (1 - s)^alpha behaviour
    with alpha > -1 is handled.
    """
    spec = spec or DEFAULT_SPEC
    if not a < b:
        if a == b:
            return IntegralResult(0.0, 0.0, 0, True)
        raise InvalidRegionError(f"empty interval [{a}, {b}]")
    graded = (b >= 1.0) if graded_to_one is None else graded_to_one
    n = spec.order
    tol = spec.relative_tolerance
    if not graded:
        total, err, panels = _adaptive_gl(fn, a, b, n, tol, spec.absolute_tolerance)
        return IntegralResult(total, err, panels, err <= max(tol * abs(total), spec.absolute_tolerance) * 10)
    d = 1.0 - a
    masses, errs, panels = [], [], 0
    tail, tail_err, ok = 0.0, math.inf, False
    for j in range(spec.max_annuli):
        lo, hi = 1.0 - d * 2.0**-j, min(1.0 - d * 2.0 ** -(j + 1), b)
        m, e, p = _adaptive_gl(fn, lo, hi, n, tol, spec.absolute_tolerance)
        masses.append(m)
        errs.append(e)
        panels += p
        if not np.isfinite(m):
            return IntegralResult(float(np.sum(masses)), math.inf, panels, False)
        if j + 1 >= 8:
            tail, tail_err, ok = geometric_tail(np.asarray(masses))
            total = float(np.sum(masses)) + tail
            budget = max(tol * abs(total), spec.absolute_tolerance)
            if ok and tail_err + sum(errs) <= budget:
                break
    partial = float(np.sum(masses))
    if not ok:
        return IntegralResult(partial, math.inf, panels, False)
    total = partial + float(np.real(tail))
    err = float(sum(errs) + tail_err)
    return IntegralResult(total, err, panels, err <= max(tol * abs(total), spec.absolute_tolerance) * 10)


def _adaptive_gl(fn, a, b, n, tol, abs_tol, depth=0, max_depth=30):
    x, w = gauss_legendre(n)
    xl, wl = gauss_legendre(max(1, n // 2))
    h, m = 0.5 * (b - a), 0.5 * (b + a)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        fine = h * float(np.dot(w, fn(m + h * x)))
        coarse = h * float(np.dot(wl, fn(m + h * xl)))
    err = abs(fine - coarse)
    if not np.isfinite(fine):
        return fine, math.inf, 1
    if err <= max(tol * abs(fine), abs_tol) or depth >= max_depth:
        return fine, err, 1
    v1, e1, p1 = _adaptive_gl(fn, a, m, n, tol, abs_tol, depth + 1, max_depth)
    v2, e2, p2 = _adaptive_gl(fn, m, b, n, tol, abs_tol, depth + 1, max_depth)
    return v1 + v2, e1 + e2, p1 + p2


def batch_tail_integrals(fn: Callable, r_lo, r_hi=1.0, *, panels: int = 30, order: int = 12):
    """Vectorized integrals of fn over [r_lo, r_hi] with panels graded toward 1.

    Intended for tails of radial profiles at many radii at once; the last
    panels' geometric decay supplies the remainder when r_hi == 1.
    """
    r_lo = np.atleast_1d(np.asarray(r_lo, dtype=float))
    r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), r_lo.shape)
    d = 1.0 - r_lo
    j = np.arange(panels + 1, dtype=float)
    marks = np.minimum(1.0 - d[:, None] * 2.0 ** -j[None, :], r_hi[:, None])
    a, b = marks[:, :-1], marks[:, 1:]
    x, w = gauss_legendre(order)
    h, m = 0.5 * (b - a), 0.5 * (b + a)
    s = m[..., None] + h[..., None] * x
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = np.asarray(fn(s.ravel()), dtype=float).reshape(s.shape)
        pieces = np.sum(np.where(h[..., None] > 0, vals * w * h[..., None], 0.0), axis=-1)
    out = pieces.sum(axis=1)
    reach = r_hi >= 1.0
    if np.any(reach):
        m1, m2 = pieces[:, -1], pieces[:, -2]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(m2 != 0, m1 / m2, 0.0)
        good = reach & (np.abs(q) < 1.0)
        out = out + np.where(good, m1 * q / (1.0 - q), np.where(reach & (m1 != 0), np.inf, 0.0))
    return out


# ---------------------------------------------------------------------------
# segments


def integrate_segment(z_end, integrand: Callable, spec: QuadratureSpec | None = None,
                      start: complex = 0.0) -> IntegralResult:
    """Line integral of a holomorphic integrand along the segment [start, z_end].

    ``z_end`` may be an array; the value is then an array of the same shape
    and the error estimate is the largest over all endpoints. Panels are
    graded toward the endpoint (where boundary singularities come closest)
    and refined until two successive refinements agree.
    """
    spec = spec or DEFAULT_SPEC
    z_arr = np.asarray(z_end, dtype=complex)
    scalar = z_arr.ndim == 0
    z_flat = np.atleast_1d(z_arr).ravel()
    for z in (z_flat if z_flat.size < 64 else z_flat[np.argmax(np.abs(z_flat))][None]):
        check_interior(z)
    if np.any(np.abs(z_flat) >= 1.0):
        raise InvalidParameterError("segment endpoints must lie in the open unit disc")
    start = complex(start)
    gap = 1.0 - np.max(np.abs(z_flat)) if z_flat.size else 1.0
    levels = int(np.clip(math.ceil(math.log2(1.0 / max(gap, 1e-16))), 1, 50))
    tol = spec.relative_tolerance
    order = spec.order
    prev = None
    err = math.inf
    panels_used = 0
    for refine in range(6):
        marks = _segment_marks(levels, refine)
        val = _segment_rule(z_flat, start, integrand, marks, order)
        panels_used = marks.size - 1
        if prev is not None:
            diff = np.abs(val - prev)
            err = float(np.max(diff)) if diff.size else 0.0
            scale = float(np.max(np.abs(val))) if val.size else 0.0
            if err <= max(tol * scale, 1e-15 * max(scale, 1.0), spec.absolute_tolerance):
                prev = val
                break
        prev = val
    converged = err <= max(tol * float(np.max(np.abs(prev)) if prev.size else 0.0),
                           1e-14, spec.absolute_tolerance) * 10
    value = prev.reshape(np.atleast_1d(z_arr).shape)
    if scalar:
        value = complex(value[0])
    return IntegralResult(value, err, panels_used, bool(converged))


def _segment_marks(levels: int, refine: int) -> np.ndarray:
    marks = [0.0] + [1.0 - 2.0**-k for k in range(1, levels + 1)] + [1.0]
    marks = np.unique(np.asarray(marks))
    for _ in range(refine):
        mids = 0.5 * (marks[:-1] + marks[1:])
        marks = np.sort(np.concatenate([marks, mids]))
    return marks


def _segment_rule(z_end, start, integrand, marks, order):
    x, w = gauss_legendre(order)
    a, b = marks[:-1], marks[1:]
    h, m = 0.5 * (b - a), 0.5 * (b + a)
    s = (m[:, None] + h[:, None] * x[None, :]).ravel()            # parameter in [0, 1]
    ws = (h[:, None] * w[None, :]).ravel()
    delta = z_end - start
    pts = start + delta[:, None] * s[None, :]
    vals = np.asarray(integrand(pts.ravel()), dtype=complex).reshape(pts.shape)
    return delta * (vals @ ws)
