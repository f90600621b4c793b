"""Compare the numba kernels against the pure-numpy fallbacks.

Each backend runs in its own interpreter because the choice is made at
import time from EMPTYSIMPLEX_BACKEND.  Run from the repository root:

    python benchmarks/bench_backends.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from emptysimplex import _backend
from emptysimplex.degree import all_subset_degrees, count_empty_simplices
from emptysimplex.functionals import clustered_subsets
from emptysimplex.geometry import PointSet, general_position

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
cases = {
    "deg_exact M=2 n=200": (lambda X: all_subset_degrees(X), PointSet(rng.random((200, 2)))),
    "deg_exact M=3 n=30": (lambda X: all_subset_degrees(X), PointSet(rng.random((30, 3)))),
    "empty_count M=2 n=60": (lambda X: count_empty_simplices(X), PointSet(rng.random((60, 2)))),
    "N_T M=3 n=2000 T=0.08": (lambda X: clustered_subsets(X, 0.08), PointSet(rng.random((2000, 3)))),
    "general_position M=2 n=300": (lambda X: general_position(X), PointSet(rng.random((300, 2)))),
}
out = {"backend": _backend.BACKEND}
for name, (fn, X) in cases.items():
    fn(X)  # warm-up (JIT compile or cache load)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(X)
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run(backend, repeat):
    env = dict(os.environ, EMPTYSIMPLEX_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run("numba", args.repeat)
    slow = run("numpy", args.repeat)
    fast.pop("backend"), slow.pop("backend")
    print(f"{'case':32s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>9s}")
    for name in fast:
        print(f"{name:32s} {fast[name]:11.4f} {slow[name]:11.4f} {slow[name] / fast[name]:8.1f}x")


if __name__ == "__main__":
    main()
