"""Compare the compiled and numpy implementations of the hot loops.

Run with ``python benchmarks/bench_kernels.py``. Both backends are called
directly, so the environment switch does not matter here.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bergmanlab import _pykernels
from bergmanlab.geometry import dyadic_family

try:
    from bergmanlab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _time(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--depth", type=int, default=10, help="dyadic family depth")
    parser.add_argument("--points", type=int, default=20000, help="number of query points")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(1)
    fam = dyadic_family(args.depth)
    sq_r, sq_t, sq_h = fam.moduli, fam.arguments, fam.half_widths
    sq_val = rng.random(len(fam))
    pr = 1.0 - rng.random(args.points) ** 2
    pt = rng.uniform(-np.pi, np.pi, args.points)
    mass = rng.random(args.points)

    cases = [
        ("containing_max", (pr, pt, sq_r, sq_t, sq_h, sq_val)),
        ("mass_in_squares", (pr, pt, mass, sq_r, sq_t, sq_h)),
    ]
    print(f"squares={len(fam)} points={args.points}")
    print(f"{'kernel':<18}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  agree")
    for name, case_args in cases:
        t_py, out_py = _time(getattr(_pykernels, name), *case_args)
        if _ckernels is None:
            print(f"{name:<18}{t_py:>12.4f}{'n/a':>14}{'n/a':>10}  -")
            continue
        t_c, out_c = _time(getattr(_ckernels, name), *case_args)
        a = out_py[0] if isinstance(out_py, tuple) else out_py
        b = out_c[0] if isinstance(out_c, tuple) else out_c
        agree = np.allclose(a, b, rtol=1e-12, atol=0)
        print(f"{name:<18}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
