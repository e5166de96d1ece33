"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``BERGMANLAB_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("BERGMANLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"


def containing_max(point_r, point_t, sq_r, sq_t, sq_h, sq_val):
    return _impl.containing_max(point_r, point_t, sq_r, sq_t, sq_h, sq_val)


def mass_in_squares(atom_r, atom_t, atom_m, sq_r, sq_t, sq_h):
    return _impl.mass_in_squares(atom_r, atom_t, atom_m, sq_r, sq_t, sq_h)
