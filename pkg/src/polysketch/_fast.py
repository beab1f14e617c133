"""Compiled inner loops for the column sketch pipeline.

The kernels mirror the numpy reference path op for op (same butterfly
pairing, same multiply order), so outputs are bitwise identical to
``sketch_vector`` composed column by column.  ``fastmath`` stays off and no
parallelism is used: results must be reproducible bit for bit.

``sketch_columns`` takes a ``repeats`` count so benchmark cells can amortize
dispatch overhead inside compiled code; normal calls pass ``repeats=1``.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _fwht(v):
    n = v.shape[0]
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            for j in range(start, start + h):
                a = v[j]
                b = v[j + h]
                v[j] = a + b
                v[j + h] = a - b
        h *= 2


@numba.njit(cache=True)
def _pair_sketch(u, v, signs1, signs2, rows1, rows2, scale, wa, wb, out):
    m = u.shape[0]
    for k in range(m):
        wa[k] = u[k] * signs1[k]
        wb[k] = v[k] * signs2[k]
    _fwht(wa)
    _fwht(wb)
    for k in range(out.shape[0]):
        out[k] = wa[rows1[k]] * wb[rows2[k]] * scale


@numba.njit(cache=True)
def sketch_columns(
    X,
    padded_dim,
    t_signs,
    t_rows,
    t_scale,
    s_signs1,
    s_signs2,
    s_rows1,
    s_rows2,
    s_scale,
    n_levels,
    base_level,
    combine_levels,
    out,
    repeats,
):
    """Run the limited-randomness degree-p sketch on every column of X.

    Per column: w_0 = T x, then n_levels squarings w_l = S(w_{l-1} x w_{l-1}),
    then z = w_{base_level} combined with the levels listed in
    ``combine_levels`` (ascending) via z = S(z x w_i).  All levels are kept,
    so non power-of-two degrees reuse the single squaring pass.
    """
    d, n = X.shape
    m = out.shape[0]
    buf = np.empty(padded_dim)
    levels = np.empty((n_levels + 1, m))
    wa = np.empty(m)
    wb = np.empty(m)
    z = np.empty(m)
    z_next = np.empty(m)
    for _ in range(repeats):
        for c in range(n):
            for i in range(d):
                buf[i] = X[i, c] * t_signs[i]
            for i in range(d, padded_dim):
                buf[i] = 0.0
            _fwht(buf)
            for k in range(m):
                levels[0, k] = buf[t_rows[k]] * t_scale
            for lev in range(1, n_levels + 1):
                _pair_sketch(
                    levels[lev - 1],
                    levels[lev - 1],
                    s_signs1,
                    s_signs2,
                    s_rows1,
                    s_rows2,
                    s_scale,
                    wa,
                    wb,
                    levels[lev],
                )
            for k in range(m):
                z[k] = levels[base_level, k]
            for idx in range(combine_levels.shape[0]):
                _pair_sketch(
                    z,
                    levels[combine_levels[idx]],
                    s_signs1,
                    s_signs2,
                    s_rows1,
                    s_rows2,
                    s_scale,
                    wa,
                    wb,
                    z_next,
                )
                for k in range(m):
                    z[k] = z_next[k]
            for k in range(m):
                out[k, c] = z[k]
