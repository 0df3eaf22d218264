#!/usr/bin/env python3
"""Time the numba kernels against the numpy fallback.

Each kernel runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` timed runs; the best time is reported.  Outputs are compared
so a speedup never hides a disagreement.

    python3 benchmarks/bench_backends.py --repeat 3
"""

import argparse
import math
import os
import time

import numpy as np

from cuspflow import kernels
from cuspflow.group import FactorKind, random_sl2


def _cases(rng):
    real = random_sl2(rng, 20_000, FactorKind.REAL, scale=3.0)
    cplx = random_sl2(rng, 20_000, FactorKind.COMPLEX, scale=3.0)
    g0 = random_sl2(rng, 1, FactorKind.REAL)[0]
    few = random_sl2(rng, 50, FactorKind.REAL)
    fewc = random_sl2(rng, 20, FactorKind.COMPLEX)
    return {
        "reduce real (20k)": lambda: kernels.reduce_batch(real, 1)[1],
        "reduce complex (20k)": lambda: kernels.reduce_batch(cplx, 2)[1],
        "orbit real (2e5 steps)": lambda: kernels.orbit_logheights(g0, 1.0, 200_000, 1),
        "enumerate real (50 x norm 400)": lambda: kernels.enumerate_pairs(few, 0.0, 400.0, 1)[3],
        "eisenstein complex (20 x norm 200)": lambda: kernels.eisenstein_sum(fewc, 1.5, 200.0, 2),
    }


def _time(fn, repeat):
    out = fn()
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    results = {}
    for backend in ("numpy", "numba"):
        os.environ["CUSPFLOW_BACKEND"] = backend
        cases = _cases(np.random.default_rng(args.seed))
        for name, fn in cases.items():
            results.setdefault(name, {})[backend] = _time(fn, args.repeat)

    print(f"{'kernel':<38}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  agree")
    for name, r in results.items():
        (tn, on), (tb, ob) = r["numpy"], r["numba"]
        on, ob = np.sort(np.ravel(on)), np.sort(np.ravel(ob))
        agree = on.shape == ob.shape and np.allclose(on, ob, rtol=1e-9, atol=1e-12)
        print(f"{name:<38}{tn:>12.4f}{tb:>12.4f}{tn / tb:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
