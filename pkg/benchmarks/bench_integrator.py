#!/usr/bin/env python3
"""Benchmark the integration kernel: numba-jitted vs pure numpy.

Runs the backward Jost integration of the built-in star-graph example at a
handful of k values and reports per-field timings for both backends.  The
two paths execute the same source; each backend runs in a subprocess so the
``JOSTKIT_BACKEND`` selection is honest (it is fixed at import time).

Usage: python benchmarks/bench_integrator.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

_WORKER = """
import json, sys, time
import numpy as np
from jostkit import kernels, model, solve
from jostkit.star_example import kirchhoff

repeat = int(sys.argv[1])
pot, _ = model.load_document(kirchhoff(-31/77).document())
cfg = solve.SolverConfig()
ks = [0.05, 0.7, 1.9]

# warm up (includes jit compilation when the numba backend is active)
solve.jost_field(pot, ks[0], cfg)
t0 = time.perf_counter()
nfields = 0
for _ in range(repeat):
    for k in ks:
        solve.jost_field(pot, k, cfg)
        nfields += 1
dt = time.perf_counter() - t0
print(json.dumps({"backend": kernels.BACKEND,
                  "fields": nfields,
                  "seconds": dt,
                  "ms_per_field": 1e3 * dt / nfields}))
"""


def run_backend(backend, repeat):
    env = dict(os.environ, JOSTKIT_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", _WORKER, str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5,
                    help="passes over the k set per backend")
    args = ap.parse_args()

    results = []
    for backend in ("numpy", "numba"):
        print(f"running {backend} backend ...", flush=True)
        t0 = time.perf_counter()
        res = run_backend(backend, args.repeat)
        res["wall_with_startup"] = time.perf_counter() - t0
        results.append(res)

    print(f"\n{'backend':<8} {'fields':>7} {'total s':>9} {'ms/field':>10}")
    for res in results:
        print(f"{res['backend']:<8} {res['fields']:>7} "
              f"{res['seconds']:>9.3f} {res['ms_per_field']:>10.3f}")
    base, accel = results[0], results[1]
    if accel["backend"] == "numba":
        print(f"\nspeedup (numba vs numpy): "
              f"{base['ms_per_field'] / accel['ms_per_field']:.1f}x")


if __name__ == "__main__":
    main()
