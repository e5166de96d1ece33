"""Pure numpy implementations of the hot loops (fallback backend)."""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def _angdist(t1, t2):
    return np.abs((t1 - t2 + math.pi) % TWO_PI - math.pi)


def containing_max(point_r, point_t, sq_r, sq_t, sq_h, sq_val, chunk: int = 1 << 22):
    """For each point, the max of ``sq_val`` over squares containing it.

    Squares are (inner radius, center angle, half-width) triples reaching the
    unit circle; containment is ``r >= sq_r`` and angular distance
    ``<= sq_h``. Returns ``(max, argmax)``; points in no square get
    ``-inf`` and ``-1``.
    """
    point_r = np.ascontiguousarray(point_r, dtype=float)
    point_t = np.ascontiguousarray(point_t, dtype=float)
    sq_val = np.ascontiguousarray(sq_val, dtype=float)
    n_pts, n_sq = point_r.size, sq_r.size
    best = np.full(n_pts, -np.inf)
    arg = np.full(n_pts, -1, dtype=np.int64)
    if n_sq == 0:
        return best, arg
    step = max(1, chunk // n_sq)
    for s in range(0, n_pts, step):
        pr = point_r[s:s + step, None]
        pt = point_t[s:s + step, None]
        inside = (pr >= sq_r[None, :]) & (_angdist(pt, sq_t[None, :]) <= sq_h[None, :])
        vals = np.where(inside, sq_val[None, :], -np.inf)
        idx = np.argmax(vals, axis=1)
        top = vals[np.arange(vals.shape[0]), idx]
        best[s:s + step] = top
        arg[s:s + step] = np.where(np.isfinite(top) | (top == np.inf), idx, -1)
    return best, arg


def mass_in_squares(atom_r, atom_t, atom_m, sq_r, sq_t, sq_h, chunk: int = 1 << 22):
    """Total atom mass inside each square."""
    atom_r = np.asarray(atom_r, dtype=float)
    atom_t = np.asarray(atom_t, dtype=float)
    atom_m = np.asarray(atom_m, dtype=float)
    n_sq = np.size(sq_r)
    out = np.zeros(n_sq)
    if atom_r.size == 0:
        return out
    step = max(1, chunk // atom_r.size)
    for s in range(0, n_sq, step):
        r = np.asarray(sq_r[s:s + step])[:, None]
        t = np.asarray(sq_t[s:s + step])[:, None]
        h = np.asarray(sq_h[s:s + step])[:, None]
        inside = (atom_r[None, :] >= r) & (_angdist(atom_t[None, :], t) <= h)
        out[s:s + step] = inside.astype(float) @ atom_m
    return out
