"""Chain kernel throughput: numba-compiled vs interpreted.

Both backends consume the same pre-drawn uniforms, so the final states
must match; the script checks that before reporting timings.

    python benchmarks/bench_chain.py --steps 200000 --nodes 6
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from eightvertex import _kernels
from eightvertex.instances import random_closed_graph
from eightvertex.mcmc import initial_state, run_chain


def time_backend(g, steps: int, backend: str, seed: int, repeat: int) -> tuple[float, np.ndarray]:
    best = float("inf")
    bits = None
    for _ in range(repeat):
        init = initial_state(g)
        t0 = time.perf_counter()
        run = run_chain(g, steps, np.random.default_rng(seed), init, backend=backend)
        best = min(best, time.perf_counter() - t0)
        bits = run.state.bits
    return best, bits


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--nodes", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    g = random_closed_graph(args.nodes, np.random.default_rng(args.seed), (1.0, 1.0, 1.0, 0.5))
    results = {"steps": args.steps, "nodes": args.nodes, "numba_available": _kernels.HAS_NUMBA}

    t_py, bits_py = time_backend(g, args.steps, "numpy", args.seed, args.repeat)
    results["numpy_seconds"] = t_py
    results["numpy_steps_per_s"] = args.steps / t_py
    if _kernels.HAS_NUMBA:
        run_chain(g, 10, np.random.default_rng(0), backend="numba")  # compile
        t_nb, bits_nb = time_backend(g, args.steps, "numba", args.seed, args.repeat)
        if not np.array_equal(bits_py, bits_nb):
            raise SystemExit("backends disagree on the final state")
        results["numba_seconds"] = t_nb
        results["numba_steps_per_s"] = args.steps / t_nb
        results["speedup"] = t_py / t_nb
    print(json.dumps(results, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
