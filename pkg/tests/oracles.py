"""Independent reference implementations used to freeze expected values.

Everything here is written as literal double loops over the defining
formulas, sharing no code with the package. The pure-Python versions are the
ground truth; the numba-compiled twins exist only so the oracle can keep up
with acceptance-scale frames, and are themselves validated against the
pure-Python versions on small inputs.
"""

from __future__ import annotations

import math

import numba
import numpy as np

UNIFORM = 0
INV_ANGULAR = 1


# --- metric oracles (pure Python) ------------------------------------------

def weight_py(az_i, el_i, az_j, el_j, variant, min_sep):
    if variant == UNIFORM:
        return 1.0
    dth = abs(az_i - az_j)
    if dth > 180.0:
        dth = 360.0 - dth
    dph = el_i - el_j
    d = math.sqrt(dth * dth + dph * dph)
    if d < min_sep:
        d = min_sep
    return 1.0 / (d * d)


def moran_py(r, az, el, variant=INV_ANGULAR, min_sep=0.05):
    """Literal double-loop evaluation, including the degenerate branches."""
    n = len(r)
    if n == 0:
        raise ValueError("empty set")
    if n == 1:
        return -1.0
    mean = sum(r) / n
    den = sum((x - mean) ** 2 for x in r)
    if den == 0.0:
        return 1.0
    num = 0.0
    wsum = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = weight_py(az[i], el[i], az[j], el[j], variant, min_sep)
            num += w * (r[i] - mean) * (r[j] - mean)
            wsum += w
    return (n / wsum) * (num / den)


def multiplier_py(intensities, gamma_ref=0.15, k=1.0):
    n = len(intensities)
    if n == 0:
        raise ValueError("empty set")
    gbar = sum(intensities) / n
    deficit = gamma_ref - gbar
    if deficit < 0.0:
        deficit = 0.0
    return math.exp(k * deficit / gamma_ref)


def variance_py(r):
    """Two-pass population variance."""
    n = len(r)
    if n == 0:
        raise ValueError("empty set")
    mean = sum(r) / n
    return sum((x - mean) ** 2 for x in r) / n


# --- metric oracle (compiled twin, for acceptance-scale frames) -------------

@numba.njit(cache=True)
def _moran_nb(r, az, el, variant, min_sep):  # pragma: no cover - compiled
    n = r.size
    if n == 1:
        return -1.0
    mean = 0.0
    for i in range(n):
        mean += r[i]
    mean /= n
    den = 0.0
    for i in range(n):
        den += (r[i] - mean) ** 2
    if den == 0.0:
        return 1.0
    num = 0.0
    wsum = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if variant == 0:
                w = 1.0
            else:
                dth = abs(az[i] - az[j])
                if dth > 180.0:
                    dth = 360.0 - dth
                dph = el[i] - el[j]
                d = math.sqrt(dth * dth + dph * dph)
                if d < min_sep:
                    d = min_sep
                w = 1.0 / (d * d)
            num += w * (r[i] - mean) * (r[j] - mean)
            wsum += w
    return (n / wsum) * (num / den)


def moran_nb(r, az, el, variant=INV_ANGULAR, min_sep=0.05):
    r = np.ascontiguousarray(r, dtype=np.float64)
    az = np.ascontiguousarray(az, dtype=np.float64)
    el = np.ascontiguousarray(el, dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty set")
    return float(_moran_nb(r, az, el, variant, min_sep))


# --- grid oracles -----------------------------------------------------------

def bin_point_py(az, el, az_min, az_span, el_min, el_span, v, h, full_circle):
    """Scalar re-derivation of the binning rules (half-open, wrap, clamp)."""
    offset = (az - az_min) % 360.0
    if full_circle:
        col = int(offset / az_span * h)
        if col > h - 1:
            col = h - 1
    elif offset < az_span:
        col = int(offset / az_span * h)
        if col > h - 1:
            col = h - 1
    else:
        d_high = offset - az_span
        d_low = 360.0 - offset
        col = h - 1 if d_high < d_low else 0
    x = (el - el_min) / el_span * v
    row = int(math.floor(x))
    if row < 0:
        row = 0
    if row > v - 1:
        row = v - 1
    return row, col


def bin_frame_py(r, az, el, profile, v, h):
    """Returns (cells dict (i,j) -> list of point indices, dropped count)."""
    az_min, az_max = profile.az_fov
    el_min, el_max = profile.el_fov
    az_span = az_max - az_min
    el_span = el_max - el_min
    full_circle = az_span == 360.0
    cells: dict[tuple[int, int], list[int]] = {}
    dropped = 0
    for idx in range(len(r)):
        if r[idx] == 0.0:
            dropped += 1
            continue
        key = bin_point_py(az[idx], el[idx], az_min, az_span, el_min, el_span, v, h, full_circle)
        cells.setdefault(key, []).append(idx)
    return cells, dropped


def frame_score_py(
    r, az, el, inten, profile, v, h,
    variant=INV_ANGULAR, min_sep=0.05, gamma_ref=0.15, k=1.0,
    use_compiled=True,
):
    """Serial reference scorer: bin, then score each cell independently.

    Returns (weighted score, unweighted score, mean range variance).
    """
    r = np.asarray(r, dtype=np.float64)
    cells, _ = bin_frame_py(r, az, el, profile, v, h)
    total = 0.0
    total_unweighted = 0.0
    total_var = 0.0
    for key in sorted(cells):
        idx = cells[key]
        cr = [float(r[i]) for i in idx]
        caz = [float(az[i]) for i in idx]
        cel = [float(el[i]) for i in idx]
        cin = [float(inten[i]) for i in idx]
        if use_compiled:
            i_val = moran_nb(np.array(cr), np.array(caz), np.array(cel), variant, min_sep)
        else:
            i_val = moran_py(cr, caz, cel, variant, min_sep)
        mult = multiplier_py(cin, gamma_ref, k)
        total += mult * i_val
        total_unweighted += i_val
        total_var += variance_py(cr)
    n_cells = v * h
    mean_var = total_var / len(cells) if cells else 0.0
    return total / n_cells, total_unweighted / n_cells, mean_var


# --- report oracle ----------------------------------------------------------

def threshold_recount_py(scores, labels, threshold):
    """Spreadsheet-style recount: (kept positive fraction, filtered negative fraction)."""
    pos = [s for fid, s in scores if labels[fid]]
    neg = [s for fid, s in scores if not labels[fid]]
    kept = sum(1 for s in pos if s < threshold) / len(pos) if pos else 0.0
    filtered = sum(1 for s in neg if s >= threshold) / len(neg) if neg else 0.0
    return kept, filtered
