"""Timing comparison of the numba kernels against their numpy fallbacks.

Run twice to see both sides of the dispatch:

    PAMKIT_NUMBA=1 python3 benchmarks/bench_kernels.py
    PAMKIT_NUMBA=0 python3 benchmarks/bench_kernels.py

or rely on the default single-process run below, which times the numpy
fallbacks directly against whatever `pamkit.kernels` dispatched to.
"""

import time

import numpy as np

from pamkit import _accel
from pamkit.kernels import (
    biquad_df2t,
    biquad_df2t_numpy,
    fnv1a64,
    fnv1a64_numpy,
    polyphase_fir,
    polyphase_fir_numpy,
)


def timeit(fn, *args, repeats=5):
    fn(*args)  # warm-up: first numba call pays for compilation
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - started)
    return best


def fmt_row(name, dispatched, fallback):
    ratio = fallback / dispatched if dispatched > 0 else float("inf")
    return f"{name:<28} {dispatched * 1e3:>10.3f} {fallback * 1e3:>10.3f} {ratio:>8.1f}x"


def main():
    r = np.random.default_rng(0)
    print(f"numba path enabled: {_accel.NUMBA_ENABLED}")
    print(f"{'kernel':<28} {'dispatch ms':>10} {'numpy ms':>10} {'speedup':>8}")

    x = r.normal(size=2_000_000)
    args = (x, 0.2, 0.4, 0.2, -0.5, 0.1)
    print(fmt_row("biquad_df2t (2M samples)", timeit(biquad_df2t, *args), timeit(biquad_df2t_numpy, *args)))

    sig = r.normal(size=441_000)
    taps = np.hanning(960)
    up, down = 160, 441
    n_out = (sig.size * up) // down
    args = (sig, taps, up, down, taps.size // 2, n_out)
    print(fmt_row("polyphase_fir (10s 44.1k->16k)", timeit(polyphase_fir, *args), timeit(polyphase_fir_numpy, *args)))

    data = r.integers(0, 256, size=8_000_000).astype(np.uint8)
    print(fmt_row("fnv1a64 (8 MB)", timeit(fnv1a64, data), timeit(fnv1a64_numpy, data)))


if __name__ == "__main__":
    main()
