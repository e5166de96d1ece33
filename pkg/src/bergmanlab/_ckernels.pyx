# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot loops in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fmod, fabs, INFINITY, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


cdef inline double angdist(double a, double b) nogil:
    cdef double m = fmod(a - b + M_PI, TWO_PI)
    if m < 0:
        m += TWO_PI
    return fabs(m - M_PI)


def containing_max(point_r, point_t, sq_r, sq_t, sq_h, sq_val):
    """For each point, the max of ``sq_val`` over squares containing it.

    Squares are visited in increasing inner radius so the scan stops at the
    first square lying beyond the point.
    """
    cdef const double[::1] pr = np.ascontiguousarray(point_r, dtype=np.float64)
    cdef const double[::1] pt = np.ascontiguousarray(point_t, dtype=np.float64)
    order = np.argsort(np.asarray(sq_r, dtype=np.float64), kind="stable")
    cdef const double[::1] sr = np.ascontiguousarray(np.asarray(sq_r, dtype=np.float64)[order])
    cdef const double[::1] st = np.ascontiguousarray(np.asarray(sq_t, dtype=np.float64)[order])
    cdef const double[::1] sh = np.ascontiguousarray(np.asarray(sq_h, dtype=np.float64)[order])
    cdef const double[::1] sv = np.ascontiguousarray(np.asarray(sq_val, dtype=np.float64)[order])
    cdef const cnp.int64_t[::1] perm = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n_pts = pr.shape[0], n_sq = sr.shape[0], i, j
    best_arr = np.full(n_pts, -np.inf)
    arg_arr = np.full(n_pts, -1, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef cnp.int64_t[::1] arg = arg_arr
    cdef double r, t, v, b
    cdef cnp.int64_t a
    with nogil:
        for i in range(n_pts):
            r = pr[i]
            t = pt[i]
            b = -INFINITY
            a = -1
            for j in range(n_sq):
                if sr[j] > r:
                    break
                if angdist(t, st[j]) <= sh[j]:
                    v = sv[j]
                    if v > b:
                        b = v
                        a = perm[j]
                    elif v == b and a >= 0 and perm[j] < a:
                        a = perm[j]
            best[i] = b
            arg[i] = a
    return best_arr, arg_arr


def mass_in_squares(atom_r, atom_t, atom_m, sq_r, sq_t, sq_h):
    """Total atom mass inside each square."""
    cdef const double[::1] ar = np.ascontiguousarray(atom_r, dtype=np.float64)
    cdef const double[::1] at = np.ascontiguousarray(atom_t, dtype=np.float64)
    cdef const double[::1] am = np.ascontiguousarray(atom_m, dtype=np.float64)
    cdef const double[::1] sr = np.ascontiguousarray(sq_r, dtype=np.float64)
    cdef const double[::1] st = np.ascontiguousarray(sq_t, dtype=np.float64)
    cdef const double[::1] sh = np.ascontiguousarray(sq_h, dtype=np.float64)
    cdef Py_ssize_t n_sq = sr.shape[0], n_at = ar.shape[0], i, j
    out_arr = np.zeros(n_sq)
    cdef double[::1] out = out_arr
    cdef double acc
    with nogil:
        for i in range(n_sq):
            acc = 0.0
            for j in range(n_at):
                if ar[j] >= sr[i] and angdist(at[j], st[i]) <= sh[i]:
                    acc += am[j]
            out[i] = acc
    return out_arr
