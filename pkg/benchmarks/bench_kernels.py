"""Compiled vs numpy kernel timings, plus an end-to-end SP fit under each backend.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--n 200] [--t 42] [--modes 5]

The end-to-end rows run in subprocesses so that ``LOWSYSID_PURE_PYTHON``
selects the backend at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from lowsysid import _pykernels

try:
    from lowsysid import _ckernels
except ImportError:  # extension not built
    _ckernels = None

END_TO_END = """
import json, time
from lowsysid import kernels
from lowsysid.solvers import SolverConfig, shared_init, sp_solve
from lowsysid.system import GenConfig, generate
_, batch = generate(GenConfig(n_x_star=3, n_u=3, n_y=3, n={n}, l={l}, noise_var=0.01, seed=0))
cfg = SolverConfig(lam=1e-3, max_iter=300, r_init=2, r_max=2, seed=0)
_, _, p0 = shared_init(batch, cfg)
start = time.process_time()
rep = sp_solve(batch, cfg, p0)
print(json.dumps({{"backend": kernels.BACKEND, "cpu_s": time.process_time() - start,
                  "iters": rep.iterations}}))
"""


def workloads(n, t, r, ny, nu, rng):
    x = rng.standard_normal((r, n, t))
    a = rng.uniform(-0.95, 0.95, r)
    blocks = rng.standard_normal((t // 2, ny, t // 2, nu))
    u = rng.standard_normal((n, t, nu))
    y = rng.standard_normal((n, t, ny))
    b = rng.standard_normal((r, nu))
    c = rng.standard_normal((ny, r))
    return {
        "causal_filter": lambda k: k.causal_filter(x, a),
        "anticausal_filter": lambda k: k.anticausal_filter(x, a),
        "antidiag_sum": lambda k: k.antidiag_sum(blocks),
        "modal_terms": lambda k: k.modal_terms(u, y, a, b, c),
    }


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end(pure: bool, n: int, l: int) -> dict:
    env = dict(os.environ)
    env.pop("LOWSYSID_PURE_PYTHON", None)
    if pure:
        env["LOWSYSID_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(n=n, l=l)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=200, help="rollouts")
    ap.add_argument("--t", type=int, default=42, help="rollout length (even)")
    ap.add_argument("--modes", type=int, default=5)
    ap.add_argument("--io", type=int, default=4, help="inputs = outputs")
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    jobs = workloads(args.n, args.t, args.modes, args.io, args.io, rng)
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, job in jobs.items():
        py = best_time(lambda: job(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<20}{py * 1e3:>12.3f}{'n/a':>13}{'':>9}")
            continue
        cy = best_time(lambda: job(_ckernels), args.repeat)
        print(f"{name:<20}{py * 1e3:>12.3f}{cy * 1e3:>13.3f}{py / cy:>8.1f}x")

    if not args.skip_end_to_end:
        l = args.t // 2 - 1
        print(f"\nsp_solve, at most 300 iterations, N={args.n}, L={l}")
        for pure in (True, False):
            res = end_to_end(pure, args.n, l)
            print(f"  {res['backend']:<8} {res['cpu_s']:8.2f} s CPU  ({res['iters']} iterations)")


if __name__ == "__main__":
    main()
