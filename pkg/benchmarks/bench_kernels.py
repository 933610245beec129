#!/usr/bin/env python3
"""Benchmark the hot kernels: numba-compiled vs pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--repeats N]

The active path is whatever the package selected at import (controlled by
BASELINE_SCOPE_NUMBA); the ``*_py`` twins are always the pure-numpy
implementations, so the comparison is meaningful only when numba is on.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from baseline_scope.mma import kernels


def timeit(fn, repeats: int) -> float:
    fn()  # warm-up (JIT compile + cache effects)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_lstm(repeats: int):
    rng = np.random.default_rng(0)
    steps, in_dim, hidden = 10, 768, 64
    x = rng.normal(size=(steps, in_dim))
    wx = rng.normal(size=(in_dim, 4 * hidden)) * 0.05
    wh = rng.normal(size=(hidden, 4 * hidden)) * 0.05
    b = np.zeros(4 * hidden)
    h, c, gates = kernels.lstm_forward_py(x, wx, wh, b)
    dh = rng.normal(size=h.shape)

    rows = []
    rows.append(("lstm_forward (10x768->64)",
                 timeit(lambda: kernels.lstm_forward(x, wx, wh, b), repeats),
                 timeit(lambda: kernels.lstm_forward_py(x, wx, wh, b), repeats)))
    rows.append(("lstm_backward (10x768->64)",
                 timeit(lambda: kernels.lstm_backward(dh, x, wx, wh, h, c, gates), repeats),
                 timeit(lambda: kernels.lstm_backward_py(dh, x, wx, wh, h, c, gates), repeats)))
    return rows


def bench_hash_embed(repeats: int):
    ids = np.arange(500, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    return [("hash_embed (500x768)",
             timeit(lambda: kernels.hash_embed(ids, 768), repeats),
             timeit(lambda: kernels.hash_embed_py(ids, 768), repeats))]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    print(f"numba path active: {kernels.NUMBA_ENABLED} "
          f"(BASELINE_SCOPE_NUMBA={os.environ.get(kernels.NUMBA_ENV_VAR, 'auto')})")
    rows = bench_lstm(args.repeats) + bench_hash_embed(args.repeats)
    width = max(len(name) for name, _, _ in rows)
    print(f"{'kernel'.ljust(width)}  {'active':>10}  {'pure numpy':>10}  {'speedup':>8}")
    for name, active, pure in rows:
        print(f"{name.ljust(width)}  {active * 1e3:>8.3f}ms  {pure * 1e3:>8.3f}ms  "
              f"{pure / active:>7.2f}x")


if __name__ == "__main__":
    main()
