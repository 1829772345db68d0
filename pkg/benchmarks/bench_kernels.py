#!/usr/bin/env python3
"""Timing comparison of the stencil backends (compiled core vs NumPy).

Times the two hot kernels on representative grids and, as an end-to-end
probe, one fixed-point step of the coupled system per backend.

Usage: python benchmarks/bench_kernels.py [--repeats 7]
"""

import argparse
import time

import numpy as np

from chemopm.grids import GridSpec
from chemopm.kernels import available_backends, get_backend
from chemopm.presets import build_initial
from chemopm.solver import ModelParams, PicardConfig, picard_step

CASES = [
    (1, 4096),
    (2, 256),
    (3, 48),
]


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_kernels(repeats):
    rows = []
    for dim, n in CASES:
        shape = (n,) * dim
        rng = np.random.default_rng(0)
        u = rng.random(shape)
        d = [rng.random(shape) for _ in range(dim)]
        vel = [rng.random(shape) - 0.5 for _ in range(dim)]
        h = 1.0 / n
        for name in available_backends():
            k = get_backend(name)
            t_diff = best_of(lambda: k.div_d_grad(u, d, h), repeats)
            t_up = best_of(lambda: k.upwind_div(u, vel, h), repeats)
            rows.append((f"{dim}d n={n}", name, t_diff, t_up))
    return rows


def bench_step(repeats):
    import os
    rows = []
    grid = GridSpec(2, 4.0, 128)
    params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=2)
    data = build_initial("random-band-limited", grid, params, seed=1,
                         options={"u_max": 2.0, "v_max": 1.0})
    for name in available_backends():
        os.environ["CHEMOPM_KERNELS"] = name
        import importlib
        import chemopm.kernels
        importlib.reload(chemopm.kernels)
        import chemopm.solver
        importlib.reload(chemopm.solver)
        from chemopm.solver import picard_step as step
        t = best_of(lambda: step(data.u0, data.v0, 0.005, params,
                                 PicardConfig(tol=1e-10)), repeats)
        rows.append(("picard step 2d n=128", name, t))
    os.environ.pop("CHEMOPM_KERNELS", None)
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    print(f"backends available: {', '.join(available_backends())}\n")
    print(f"{'case':<14} {'backend':<8} {'div_d_grad':>12} {'upwind_div':>12}")
    kernel_rows = bench_kernels(args.repeats)
    for case, name, t_diff, t_up in kernel_rows:
        print(f"{case:<14} {name:<8} {t_diff*1e3:>10.3f}ms {t_up*1e3:>10.3f}ms")

    by_case = {}
    for case, name, t_diff, t_up in kernel_rows:
        by_case.setdefault(case, {})[name] = (t_diff, t_up)
    if "cython" in available_backends():
        print("\nspeedup (numpy / cython):")
        for case, vals in by_case.items():
            sd = vals["numpy"][0] / vals["cython"][0]
            su = vals["numpy"][1] / vals["cython"][1]
            print(f"  {case:<14} div_d_grad x{sd:.1f}  upwind_div x{su:.1f}")

    print()
    for case, name, t in bench_step(args.repeats):
        print(f"{case:<22} {name:<8} {t*1e3:>10.2f}ms")


if __name__ == "__main__":
    main()
