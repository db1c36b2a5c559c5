#!/usr/bin/env python3
"""Benchmark the numba kernels against the numpy/LAPACK fallbacks.

Runs each hot kernel in both lanes on representative workloads and prints a
timing table.  The numba lane is warmed first so JIT compilation does not
pollute the numbers.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

import fpcascade.kernels as K


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_cascade(nx=801, nt=500):
    x = np.linspace(-10.0, 10.0, nx)
    dx = x[1] - x[0]
    dt = 4.99 / (nt - 1)
    t = 0.01 + np.arange(nt) * dt
    s = -(x * x) / 4.0
    q = 0.5 * np.ones_like(x)

    def run(step):
        cur = s.copy()
        nxt = np.empty_like(cur)
        for j in range(nt - 1):
            step(x, t[j] + 0.5 * dt, 1.0, dt, dx, cur, q, nxt)
            cur, nxt = nxt, cur

    return {
        "numba": lambda: run(K.cascade_cn_step_numba),
        "numpy": lambda: run(K.cascade_cn_step_numpy),
    }


def bench_fp(nx=1601, nt=1101):
    x = np.linspace(-12.0, 12.0, nx)
    dx = x[1] - x[0]
    dt = 0.99 / (nt - 1)
    w = np.exp(-x * x / 0.04)
    w /= w.sum() * dx
    w[0] = w[-1] = 0.0
    a_half = -0.1 * (x[:-1] + dx / 2)

    def run(step):
        cur = w.copy()
        nxt = np.empty_like(cur)
        for _ in range(nt - 1):
            step(a_half, 1.0, dt, dx, cur, nxt)
            cur, nxt = nxt, cur

    return {
        "numba": lambda: run(K.fp_cn_step_numba),
        "numpy": lambda: run(K.fp_cn_step_numpy),
    }


def bench_normals(n_paths=100000, n_steps=200):
    states = K.path_stream_states(20107, n_paths)
    z = np.empty(n_paths)

    def run(gen):
        for k in range(n_steps):
            gen(states, k, z)

    return {
        "numba": lambda: run(K.bm_normals_numba),
        "numpy": lambda: run(K.bm_normals_numpy),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not K.HAS_NUMBA:
        print("numba is not importable; only the numpy lane will run")

    benches = {
        "cascade CN loop (801 x 500)": bench_cascade(),
        "density CN loop (1601 x 1101)": bench_fp(),
        "normals (1e5 paths x 200 steps)": bench_normals(),
    }
    print(f"{'kernel':<34} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for name, lanes in benches.items():
        if K.HAS_NUMBA:
            lanes["numba"]()  # warm the JIT cache
            t_nb = best_of(lanes["numba"], args.repeats)
        else:
            t_nb = float("nan")
        t_np = best_of(lanes["numpy"], args.repeats)
        speedup = t_np / t_nb if t_nb == t_nb else float("nan")
        print(f"{name:<34} {t_nb:>9.4f}s {t_np:>9.4f}s {speedup:>8.2f}x")


if __name__ == "__main__":
    main()
