"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case runs the same solver call on both backends (and the generic
oracle loop) and reports the best wall time of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np

from agda_pl._kernels import available_backends
from agda_pl.core import SolverConfig, StepSchedule
from agda_pl.problems import DatasetKind, gen_rls_dataset, make_logistic_bilinear, make_rls, make_toy
from agda_pl.solvers import agda_run, stoc_agda_run, vr_agda_run


def cases():
    toy, lb = make_toy(), make_logistic_bilinear()
    rls = make_rls(gen_rls_dataset(DatasetKind.DATASET1, (200, 50), seed=0, row_scale=200**-0.5))
    z = (np.zeros(rls.d1), np.zeros(rls.d2))
    yield "toy agda 1e5 steps", lambda b: agda_run(
        toy, StepSchedule.constant(1e-3, 1e-2), [1.0], [1.0], SolverConfig(max_iters=10**5, metrics_every=10**4), backend=b)
    yield "logistic agda 1e5 steps", lambda b: agda_run(
        lb, StepSchedule.constant(0.025, 0.025), [1.0], [1.0], SolverConfig(max_iters=10**5, metrics_every=10**4), backend=b)
    yield "rls stoc-agda 2e4 steps", lambda b: stoc_agda_run(
        rls, StepSchedule.constant(5e-4, 1e-3), *z, SolverConfig(max_iters=2 * 10**4, metrics_every=10**4), backend=b)
    yield "rls vr-agda 2e4 inner steps", lambda b: vr_agda_run(
        rls, 5e-4, 1e-3, *z, SolverConfig(vr_inner_N=2000, vr_outer_T=10, metrics_every=2000), backend=b)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()[::-1] + ["generic"]
    print(f"{'case':32s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, run in cases():
        t = {b: best_time(lambda: run(b), args.repeat) for b in backends}
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{name:32s}" + "".join(f"{t[b]:11.3f}s" for b in backends) + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
