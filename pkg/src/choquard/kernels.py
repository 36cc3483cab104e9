"""Brute-force convolution loops, with numba acceleration when available.

The spectral path never needs these; they exist as oracles.  Direct periodic
convolution is O(M^{2N}) and python loops are hopeless at 16^3, so the hot
pair loops are numba-jitted.  Every jitted function has a pure-numpy twin
(suffix ``_np``) used when numba is missing or when CHOQUARD_NO_NUMBA is set;
``direct_convolve``/``direct_convolve_vec`` dispatch to whichever is active.
"""

from __future__ import annotations

import os

import numpy as np

# The portable threading layer avoids a TBB version probe that warns on
# import; this is a single-process tool, so the choice costs nothing.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    from numba import njit, prange
    HAS_NUMBA = True
except ImportError:          # pragma: no cover - exercised via env flag instead
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap if not (args and callable(args[0])) else args[0]

    prange = range


def numba_active() -> bool:
    return HAS_NUMBA and not os.environ.get("CHOQUARD_NO_NUMBA")


@njit(cache=True, parallel=True)
def _direct_convolve_nb(kern, g, out):      # pragma: no cover - compiled
    M0, M1, M2 = g.shape
    for i0 in prange(M0):
        for i1 in range(M1):
            for i2 in range(M2):
                acc = 0.0
                for j0 in range(M0):
                    d0 = (i0 - j0) % M0
                    for j1 in range(M1):
                        d1 = (i1 - j1) % M1
                        for j2 in range(M2):
                            acc += kern[d0, d1, (i2 - j2) % M2] * g[j0, j1, j2]
                out[i0, i1, i2] = acc
    return out


def direct_convolve_np(kern: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Periodic convolution sum_l kern[j-l] g[l] by explicit rolls."""
    out = np.zeros_like(g)
    it = np.ndindex(*g.shape)
    for idx in it:
        w = g[idx]
        if w != 0.0:
            out += w * np.roll(kern, shift=idx, axis=tuple(range(g.ndim)))
    return out


def direct_convolve(kern: np.ndarray, g: np.ndarray) -> np.ndarray:
    if numba_active() and g.ndim == 3:
        out = np.empty_like(g)
        return _direct_convolve_nb(np.ascontiguousarray(kern),
                                   np.ascontiguousarray(g), out)
    return direct_convolve_np(kern, g)


@njit(cache=True, parallel=True)
def _direct_convolve_vec_nb(kern_axes, g, out):   # pragma: no cover - compiled
    # kern_axes: (3, M, M, M) vector kernel components
    M0, M1, M2 = g.shape
    for i0 in prange(M0):
        for i1 in range(M1):
            for i2 in range(M2):
                a0 = 0.0
                a1 = 0.0
                a2 = 0.0
                for j0 in range(M0):
                    d0 = (i0 - j0) % M0
                    for j1 in range(M1):
                        d1 = (i1 - j1) % M1
                        for j2 in range(M2):
                            d2 = (i2 - j2) % M2
                            w = g[j0, j1, j2]
                            a0 += kern_axes[0, d0, d1, d2] * w
                            a1 += kern_axes[1, d0, d1, d2] * w
                            a2 += kern_axes[2, d0, d1, d2] * w
                out[0, i0, i1, i2] = a0
                out[1, i0, i1, i2] = a1
                out[2, i0, i1, i2] = a2
    return out


def direct_convolve_vec_np(kern_axes: np.ndarray, g: np.ndarray) -> np.ndarray:
    out = np.zeros_like(kern_axes)
    for idx in np.ndindex(*g.shape):
        w = g[idx]
        if w != 0.0:
            out += w * np.roll(kern_axes, shift=idx, axis=tuple(range(1, g.ndim + 1)))
    return out


def direct_convolve_vec(kern_axes: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Componentwise periodic convolution with a vector kernel."""
    if numba_active() and g.ndim == 3 and kern_axes.shape[0] == 3:
        out = np.empty_like(kern_axes)
        return _direct_convolve_vec_nb(np.ascontiguousarray(kern_axes),
                                       np.ascontiguousarray(g), out)
    return direct_convolve_vec_np(kern_axes, g)


@njit(cache=True)
def _radial_monotone_defect_nb(r_sorted, v_sorted, shell_width):  # pragma: no cover
    # walk sorted radii; record the worst increase of the shell-mean profile
    n = r_sorted.size
    worst = 0.0
    prev_mean = -1.0
    i = 0
    shell_end = r_sorted[0] + shell_width
    acc = 0.0
    cnt = 0
    while i < n:
        if r_sorted[i] <= shell_end:
            acc += v_sorted[i]
            cnt += 1
            i += 1
        else:
            if cnt > 0:
                mean = acc / cnt
                if prev_mean >= 0.0 and mean > prev_mean:
                    d = mean - prev_mean
                    if d > worst:
                        worst = d
                prev_mean = mean
            acc = 0.0
            cnt = 0
            shell_end += shell_width
    if cnt > 0:
        mean = acc / cnt
        if prev_mean >= 0.0 and mean > prev_mean:
            d = mean - prev_mean
            if d > worst:
                worst = d
    return worst


def radial_monotone_defect_np(r_sorted, v_sorted, shell_width):
    edges = np.arange(r_sorted[0], r_sorted[-1] + 2 * shell_width, shell_width)
    idx = np.clip(np.searchsorted(edges, r_sorted, side="right") - 1, 0, len(edges) - 2)
    sums = np.bincount(idx, weights=v_sorted, minlength=len(edges) - 1)
    cnts = np.bincount(idx, minlength=len(edges) - 1)
    means = sums[cnts > 0] / cnts[cnts > 0]
    if means.size < 2:
        return 0.0
    inc = np.diff(means)
    return float(max(0.0, inc.max()))


def radial_monotone_defect(r: np.ndarray, v: np.ndarray, shell_width: float) -> float:
    """Largest increase between consecutive shell means of v(r); 0 for a
    radially nonincreasing profile."""
    order = np.argsort(r.ravel())
    rs = np.ascontiguousarray(r.ravel()[order])
    vs = np.ascontiguousarray(v.ravel()[order])
    if numba_active():
        return float(_radial_monotone_defect_nb(rs, vs, shell_width))
    return radial_monotone_defect_np(rs, vs, shell_width)
