"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from bslqb.kernels import available_backends, get_backend


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases(seed=0):
    rng = np.random.default_rng(seed)
    nx = ny = 256
    dx = 1.0 / nx
    coeffs = 0.2 * rng.normal(size=(nx, ny, 2))
    pts = rng.uniform(2 * dx, 1.0 - 2 * dx, size=(200_000, 2))
    npart = 200_000
    px = rng.uniform(0.1, 0.9, size=(npart, 2))
    pm = np.full(npart, 1e-4)
    pv = rng.normal(size=(npart, 2))
    pC = rng.normal(size=(npart, 2, 2))
    nodal = rng.normal(size=(nx + 1, ny + 1))
    frozen = np.zeros((nx + 1, ny + 1), dtype=bool)
    frozen[nx // 2 - 1 : nx // 2 + 1, :] = True
    dist = np.full((nx + 1, ny + 1), 2.0)
    dist[frozen] = 0.3 * dx

    def cases(k):
        return {
            "eval_velocity (200k pts)": lambda: k.eval_velocity(
                coeffs, 0.0, 0.0, dx, pts, True
            ),
            "eval_velocity_grad (200k pts)": lambda: k.eval_velocity_grad(
                coeffs, 0.0, 0.0, dx, pts, True
            ),
            "bslqb_nodes (256^2, CFL~2)": lambda: k.bslqb_nodes(
                coeffs, 0.0, 0.0, dx, 2 * dx / 0.6, 1e-10, 10
            ),
            "p2g (200k particles)": lambda: k.p2g(
                px, pm, pv, pC, 0.0, 0.0, dx, nx, ny
            ),
            "sample_linear (200k pts)": lambda: k.sample_linear(
                nodal, 0.0, 0.0, dx, pts
            ),
            "redistance (257^2, 4 passes)": lambda: k.redistance_sweeps(
                dist.copy(), frozen, dx, 4
            ),
            "particles_to_levelset (200k)": lambda: k.particles_to_levelset(
                px, 0.36 * dx, 0.0, 0.0, dx, nx + 1, ny + 1, 1.0
            ),
        }

    return cases


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    cases = make_cases()
    names = list(cases(get_backend(backends[0])).keys())
    times = {b: {} for b in backends}
    for b in backends:
        k = get_backend(b)
        for name, fn in cases(k).items():
            fn()  # warm up
            times[b][name] = timeit(fn, args.repeat)

    width = max(len(n) for n in names)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name in names:
        row = f"{name:<{width}}  "
        for b in backends:
            row += f"{times[b][name] * 1e3:>10.2f}ms"
        if len(backends) == 2:
            row += f"{times[backends[1]][name] / times[backends[0]][name]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
