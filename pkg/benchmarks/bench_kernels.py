"""Benchmark the accelerated kernels against their pure-numpy fallbacks.

Run with::

    python benchmarks/bench_kernels.py

Both implementations are importable regardless of which one the package
selected at import time, so a single process times the active (numba when
available) path next to the numpy fallback.  Setting ``BFCHART_NO_NUMBA=1``
makes the active path itself the fallback, which is a quick way to verify
the flag.
"""

from __future__ import annotations

import time

import numpy as np

from bfchart import USING_NUMBA, _accel
from bfchart.linalg import cholesky, make_rng


def timeit(func, *args, repeat: int = 5) -> float:
    func(*args)  # warm-up (JIT compilation, caches)
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_filter_path(n=20000, p=4):
    y = np.ascontiguousarray(make_rng(1).standard_normal((n, p)))
    args = (y, 0.9, np.zeros(p), 1e-3)
    return (
        timeit(_accel.filter_path, *args),
        timeit(_accel._filter_path_np, *args),
    )


def bench_lbf_path(n=20000, p=4):
    y = np.ascontiguousarray(make_rng(2).standard_normal((n, p)))
    e, m_pre, p_pre, s_post, _, _ = _accel._filter_path_np(y, 0.9, np.zeros(p), 1e-3)
    s_pre = np.concatenate([np.zeros((1, p, p)), s_post[:-1]], axis=0)
    v = np.eye(p)
    args = (
        y,
        np.ascontiguousarray(m_pre),
        p_pre,
        np.ascontiguousarray(s_pre),
        0.9,
        np.zeros(p),
        cholesky(v),
        0.0,
        20,
    )
    return (timeit(_accel.lbf_path, *args), timeit(_accel._lbf_path_np, *args))


def bench_ewma_path(n=2_000_000):
    x = make_rng(3).standard_normal(n)
    args = (x, 0.05, 0.0)
    return (timeit(_accel.ewma_path, *args), timeit(_accel._ewma_path_np, *args))


def bench_run_length_chunk(n=2_000_000):
    noise = make_rng(4).standard_normal(n)
    args = (noise, 0.0, 0.0, 0.1, 0.0, 0.05, 100.0, -100.0)
    return (
        timeit(_accel.run_length_chunk, *args),
        timeit(_accel._rl_chunk_np, *args),
    )


def main() -> None:
    active = "numba" if USING_NUMBA else "numpy fallback (BFCHART_NO_NUMBA)"
    print(f"active path: {active}")
    print(f"{'kernel':<22} {'active':>12} {'numpy':>12} {'speedup':>9}")
    benches = [
        ("filter_path", bench_filter_path),
        ("lbf_path", bench_lbf_path),
        ("ewma_path", bench_ewma_path),
        ("run_length_chunk", bench_run_length_chunk),
    ]
    for name, bench in benches:
        fast, slow = bench()
        print(f"{name:<22} {fast * 1e3:>10.2f}ms {slow * 1e3:>10.2f}ms "
              f"{slow / fast:>8.1f}x")


if __name__ == "__main__":
    main()
