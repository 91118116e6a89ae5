"""Hot numeric kernels: numba-compiled when available, numpy/python fallbacks otherwise.

The dispatched names (``biquad_df2t``, ``polyphase_fir``, ``fnv1a64``) are
what the rest of the package calls. The ``*_numpy`` variants stay importable
for benchmarking and cross-checking; see ``benchmarks/bench_kernels.py``.
Selection is controlled by the ``PAMKIT_NUMBA`` env flag (see _accel).
"""

import numpy as np

from . import _accel

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _biquad_loop(x, b0, b1, b2, a1, a2, out):
    # direct form II transposed; a0 already normalized to 1
    z1 = 0.0
    z2 = 0.0
    for n in range(x.shape[0]):
        xn = x[n]
        yn = b0 * xn + z1
        z1 = b1 * xn - a1 * yn + z2
        z2 = b2 * xn - a2 * yn
        out[n] = yn
    return out


def biquad_df2t_numpy(x, b0, b1, b2, a1, a2):
    out = np.empty_like(x)
    _biquad_loop(x, b0, b1, b2, a1, a2, out)
    return out


def _polyphase_loop(x, h, up, down, delay, out):
    n_in = x.shape[0]
    n_h = h.shape[0]
    taps = n_h // up
    for t in range(out.shape[0]):
        j = t * down + delay
        p = j % up
        base = j // up
        acc = 0.0
        for m in range(taps):
            k = p + m * up
            i = base - m
            if 0 <= i < n_in and k < n_h:
                acc += h[k] * x[i]
        out[t] = acc
    return out


def polyphase_fir_numpy(x, h, up, down, delay, n_out):
    # vectorized over outputs, accumulating tap by tap in the same order as
    # _polyphase_loop so both paths agree bit for bit
    taps = h.shape[0] // up
    j = np.arange(n_out, dtype=np.int64) * down + delay
    p = j % up
    base = j // up
    acc = np.zeros(n_out, dtype=np.float64)
    for m in range(taps):
        k = p + m * up
        i = base - m
        valid = (i >= 0) & (i < x.shape[0]) & (k < h.shape[0])
        acc[valid] += h[k[valid]] * x[i[valid]]
    return acc


def fnv1a64_numpy(data):
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ int(b)) * FNV_PRIME) & _MASK64
    return h


if _accel.NUMBA_ENABLED:
    _biquad_jit = _accel.njit(cache=True)(_biquad_loop)
    _polyphase_jit = _accel.njit(cache=True)(_polyphase_loop)

    @_accel.njit(cache=True)
    def _fnv1a64_jit(data):
        h = np.uint64(FNV_OFFSET)
        prime = np.uint64(FNV_PRIME)
        for i in range(data.shape[0]):
            h = (h ^ np.uint64(data[i])) * prime
        return h

    def biquad_df2t(x, b0, b1, b2, a1, a2):
        out = np.empty_like(x)
        _biquad_jit(x, b0, b1, b2, a1, a2, out)
        return out

    def polyphase_fir(x, h, up, down, delay, n_out):
        out = np.empty(n_out, dtype=np.float64)
        _polyphase_jit(x, h, up, down, delay, out)
        return out

    def fnv1a64(data):
        return int(_fnv1a64_jit(np.ascontiguousarray(data, dtype=np.uint8)))

else:

    def biquad_df2t(x, b0, b1, b2, a1, a2):
        return biquad_df2t_numpy(x, b0, b1, b2, a1, a2)

    def polyphase_fir(x, h, up, down, delay, n_out):
        return polyphase_fir_numpy(x, h, up, down, delay, n_out)

    def fnv1a64(data):
        return fnv1a64_numpy(np.ascontiguousarray(data, dtype=np.uint8))
