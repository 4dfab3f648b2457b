"""Compare the numba and numpy clearing backends.

The backend is fixed at import time, so each one runs in its own interpreter
with AGRIFIN_BACKEND set. Reports per-call timings for a full-grid clearing,
a complete gamma solve and an alpha sweep, plus the gamma agreement.

    python benchmarks/bench_backends.py [--repeat 20] [--sweep-points 51]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from agrifin import BACKEND, REFERENCE, build_grid, solve_gamma
from agrifin.clearing import clear_schedule
from agrifin.sweep import alpha_sweep_spec, run_sweep

repeat, n_sweep = int(sys.argv[1]), int(sys.argv[2])
grid = build_grid(REFERENCE)

t0 = time.perf_counter()
sol = solve_gamma(REFERENCE, grid)
first = time.perf_counter() - t0

def best(fn, n):
    times = []
    for _ in range(n):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times), float(np.median(times))

clear = best(lambda: clear_schedule(grid.nodes, sol.gamma, REFERENCE), repeat)
solve = best(lambda: solve_gamma(REFERENCE, grid), repeat)
spec = alpha_sweep_spec(REFERENCE, n=n_sweep)
sweep = best(lambda: run_sweep(spec, refine=False), max(1, repeat // 10))
print(json.dumps({
    "backend": BACKEND, "gamma": sol.gamma, "first_call_s": first,
    "clear_grid_s": clear, "solve_gamma_s": solve, "sweep_s": sweep,
}))
"""


def run(backend, repeat, n_sweep):
    env = dict(os.environ, AGRIFIN_BACKEND=backend)
    env.pop("AGRIFIN_DISABLE_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat), str(n_sweep)],
        env=env, check=True, capture_output=True, text=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sweep-points", type=int, default=51)
    args = ap.parse_args(argv)

    res = {b: run(b, args.repeat, args.sweep_points) for b in ("numba", "numpy")}
    print(f"{'':22s}{'numba':>14s}{'numpy':>14s}{'speedup':>10s}")
    for key, label in [("clear_grid_s", "clear 133 nodes"), ("solve_gamma_s", "solve gamma"), ("sweep_s", f"sweep {args.sweep_points} alphas")]:
        a, b = res["numba"][key][0], res["numpy"][key][0]
        print(f"{label:22s}{a * 1e3:11.3f} ms{b * 1e3:11.3f} ms{b / a:9.1f}x")
    print(f"{'first call (compile)':22s}{res['numba']['first_call_s']:12.3f} s{res['numpy']['first_call_s']:12.3f} s")
    diff = abs(res["numba"]["gamma"] - res["numpy"]["gamma"])
    print(f"gamma numba={res['numba']['gamma']:.15g} numpy={res['numpy']['gamma']:.15g} |diff|={diff:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
