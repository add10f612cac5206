"""Numerical kernels for the inverse-squared angular weight scheme.

The quadratic form sum_ij w_ij * dr_i * dr_j (diagonal excluded) and the
weight total sum_ij w_ij dominate the cost of scoring a frame, so they get
a compiled kernel. A blocked NumPy twin keeps the package usable without a
working numba install (set ``PCQ_DISABLE_NUMBA=1`` to force it); both paths
agree to roundoff and each is deterministic run to run.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = bool(os.environ.get("PCQ_DISABLE_NUMBA"))

try:  # pragma: no cover - exercised implicitly on import
    if _DISABLED:
        raise ImportError("numba disabled by PCQ_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def _quadform_numpy(az, el, dr, min_sep):
    # Blocked so the n x n distance matrix never exceeds ~4M doubles.
    n = az.size
    min2 = min_sep * min_sep
    block = max(1, 4_000_000 // max(n, 1))
    num = 0.0
    wsum = 0.0
    for start in range(0, n, block):
        stop = min(start + block, n)
        dth = np.abs(az[start:stop, None] - az[None, :])
        np.minimum(dth, 360.0 - dth, out=dth)
        dph = el[start:stop, None] - el[None, :]
        d2 = dth * dth + dph * dph
        np.maximum(d2, min2, out=d2)
        w = np.reciprocal(d2, out=d2)
        # zero the diagonal of this block
        idx = np.arange(start, stop)
        w[idx - start, idx] = 0.0
        num += float(np.sum(w * dr[start:stop, None] * dr[None, :]))
        wsum += float(w.sum())
    return num, wsum


if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=True, nogil=True)
    def _quadform_numba(az, el, dr, min_sep):  # pragma: no cover - compiled
        # w_ij is symmetric, so each unordered pair is visited once and the
        # row total doubled (exact in binary). This halves the work and keeps
        # the oversized clamp-weight diagonal term out of the accumulators,
        # where adding and then subtracting it costs ~1e-12 in the quotient.
        n = az.size
        min2 = min_sep * min_sep
        num = 0.0
        wsum = 0.0
        for i in range(n):
            row_num = 0.0
            row_w = 0.0
            for j in range(i + 1, n):
                dth = abs(az[i] - az[j])
                if dth > 180.0:
                    dth = 360.0 - dth
                dph = el[i] - el[j]
                d2 = dth * dth + dph * dph
                if d2 < min2:
                    d2 = min2
                w = 1.0 / d2
                row_num += w * dr[j]
                row_w += w
            num += 2.0 * (dr[i] * row_num)
            wsum += 2.0 * row_w
        return num, wsum


def inv_angular_quadform(az, el, dr, min_sep):
    """Return ``(num, wsum)`` for inverse-squared angular weights.

    ``num`` is sum_{i != j} w_ij dr_i dr_j and ``wsum`` is sum_{i != j} w_ij,
    with the angular distance floored at ``min_sep`` degrees.
    """
    az = np.ascontiguousarray(az, dtype=np.float64)
    el = np.ascontiguousarray(el, dtype=np.float64)
    dr = np.ascontiguousarray(dr, dtype=np.float64)
    if HAVE_NUMBA:
        return _quadform_numba(az, el, dr, float(min_sep))
    return _quadform_numpy(az, el, dr, float(min_sep))
