"""Finite-family suprema with a growth diagnostic.

Every "constant" in this package is the maximum of a quantity over a finite
family of Carleson squares (or grid points). That maximum is a lower bound
for the true supremum; the growth of the running maximum over the deepest
levels tells bounded suprema apart from divergent ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CarlesonSquare

DIVERGENCE_SLOPE = 0.15
SLOPE_WINDOW = 4


@dataclass(frozen=True)
class ConstantEstimate:
    """Maximum over a finite family.

    Attributes
    ----------
    value : float
        Largest sampled value (a lower bound for the supremum).
    witness : CarlesonSquare or None
        Square attaining ``value`` (None when the witness is the origin).
    witness_anchor : complex
        Anchor point of the witness.
    samples : int
        Number of sampled squares or points.
    level_slope : float
        log2 growth per level of the running maximum over the last levels.
    diverging : bool
        True when ``level_slope`` exceeds the threshold or a sample is infinite.
    level_max : tuple of float
        Running maximum after each level.
    """

    value: float
    witness: CarlesonSquare | None
    witness_anchor: complex
    samples: int
    level_slope: float
    diverging: bool
    level_max: tuple = field(default=())
    note: str = ""

    @property
    def bounded(self) -> bool:
        return not self.diverging

    def as_record(self) -> dict:
        return {
            "value": _jsonable(self.value),
            "witness_anchor": [float(np.real(self.witness_anchor)), float(np.imag(self.witness_anchor))],
            "samples": int(self.samples),
            "slope": _jsonable(self.level_slope),
            "diverging": bool(self.diverging),
            "level_max": [_jsonable(v) for v in self.level_max],
            "note": self.note,
        }


def _jsonable(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def level_maxima(values, levels) -> tuple[np.ndarray, np.ndarray]:
    """Per-level maxima: returns (sorted distinct levels, max at each)."""
    values = np.asarray(values, dtype=float)
    levels = np.asarray(levels)
    uniq = np.unique(levels)
    out = np.array([np.max(values[levels == lv]) for lv in uniq]) if uniq.size else np.zeros(0)
    return uniq, out


def growth_slope(series, window: int = SLOPE_WINDOW) -> float:
    """log2 growth per step over the last ``window`` entries (endpoint rule)."""
    s = np.asarray(series, dtype=float)
    if s.size < 2:
        return 0.0
    tail = s[-window:]
    first, last = tail[0], tail[-1]
    if np.isinf(last) and not np.isinf(first):
        return math.inf
    if first <= 0 or last <= 0 or not np.isfinite(first) or not np.isfinite(last):
        return 0.0 if last <= first or not np.isfinite(last) else math.inf
    return float((math.log2(last) - math.log2(first)) / (tail.size - 1))


def fit_log_slope(levels, values) -> float:
    """Least-squares slope of log2(values) against levels (positive values only)."""
    x = np.asarray(levels, dtype=float)
    y = np.asarray(values, dtype=float)
    ok = (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(x[ok], np.log2(y[ok]), 1)[0])


def estimate_from_samples(values, levels, anchors, *, squares=None, note: str = "",
                          threshold: float = DIVERGENCE_SLOPE) -> ConstantEstimate:
    """Assemble a :class:`ConstantEstimate` from per-sample values.

    ``levels`` orders the samples into refinement levels and ``anchors`` gives
    the anchor point of each sample. NaN values (0/0) are ignored; +inf values
    make the estimate diverging.
    """
    values = np.asarray(values, dtype=float)
    levels = np.asarray(levels)
    anchors = np.asarray(anchors, dtype=complex)
    if values.size == 0:
        return ConstantEstimate(0.0, None, 0j, 0, 0.0, False, (), note)
    clean = np.where(np.isnan(values), -np.inf, values)
    idx = int(np.argmax(clean))
    value = float(clean[idx])
    if value == -np.inf:
        value = math.nan
    uniq, per_level = level_maxima(clean, levels)
    running = np.maximum.accumulate(per_level) if per_level.size else per_level
    slope = growth_slope(running)
    diverging = bool(np.isinf(value) or slope > threshold)
    anchor = complex(anchors[idx])
    if squares is not None:
        witness = squares[idx]
    else:
        witness = CarlesonSquare(abs(anchor), float(np.angle(anchor))) if 0 < abs(anchor) < 1 else None
    return ConstantEstimate(value, witness, anchor, int(values.size), slope, diverging,
                            tuple(float(v) for v in running), note)
