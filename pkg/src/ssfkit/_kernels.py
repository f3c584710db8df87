"""Loop-bound numerical kernels with optional numba acceleration.

Two kernels live here because they iterate over ~10^3 small blocks or grid
points where interpreter dispatch dominates: the block-tridiagonal
resolvent trace (two-sweep Green's function recursion) and the smoothed
counting sweep.  Everything else in the package is LAPACK-bound and gains
nothing from jit.

Set SSFKIT_DISABLE_NUMBA=1 to force the pure numpy path (used by the
benchmark script and the fallback-equivalence tests); without numba
installed the fallback is selected automatically.
"""
import math
import os

import numpy as np

try:
    if os.environ.get("SSFKIT_DISABLE_NUMBA", "0") == "1":
        raise ImportError("numba disabled by SSFKIT_DISABLE_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


def _rgf_trace_impl(Ad, Bu, z):
    """tr (G - z)^{-1} for Hermitian block tridiagonal G.

    Ad: (m, n, n) complex128 diagonal blocks, Bu: (m-1, n, n) complex128
    superdiagonal blocks (G[k, k+1] = Bu[k]), z complex.  Left and right
    boundary Green's blocks are built in one forward and one backward
    sweep, then combined per block.
    """
    m, n, _ = Ad.shape
    eye = np.zeros((n, n), np.complex128)
    for i in range(n):
        eye[i, i] = 1.0
    shifted = Ad - z * eye
    if m == 1:
        return np.trace(np.linalg.inv(shifted[0]))
    gl = np.empty_like(Ad)
    gl[0] = np.linalg.inv(shifted[0])
    for k in range(1, m):
        bk = Bu[k - 1]
        gl[k] = np.linalg.inv(shifted[k] - bk.conj().T @ gl[k - 1] @ bk)
    gr = np.empty_like(Ad)
    gr[m - 1] = np.linalg.inv(shifted[m - 1])
    for k in range(m - 2, -1, -1):
        bk = Bu[k]
        gr[k] = np.linalg.inv(shifted[k] - bk @ gr[k + 1] @ bk.conj().T)
    total = np.trace(np.linalg.inv(shifted[0] - Bu[0] @ gr[1] @ Bu[0].conj().T))
    for k in range(1, m - 1):
        gkk = np.linalg.inv(shifted[k]
                            - Bu[k - 1].conj().T @ gl[k - 1] @ Bu[k - 1]
                            - Bu[k] @ gr[k + 1] @ Bu[k].conj().T)
        total += np.trace(gkk)
    total += np.trace(np.linalg.inv(
        shifted[m - 1] - Bu[m - 2].conj().T @ gl[m - 2] @ Bu[m - 2]))
    return total


def _smoothed_count_impl(mu_m, mu_p, union, lams, bp_lo, c_sigma, k_near,
                         sigma_floor):
    """Gaussian-mollified counting difference on a grid of lam values.

    sigma at each lam is c_sigma times the median consecutive gap of the
    2*k_near union eigenvalues nearest lam, floored at sigma_floor; below
    the lowest positive breakpoint bp_lo the width is additionally capped
    by half the distance to bp_lo and half of max(lam, sigma_floor).
    """
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    out = np.empty(lams.size)
    for i in range(lams.size):
        lam = lams[i]
        j = np.searchsorted(union, lam)
        a = j - k_near
        if a < 0:
            a = 0
        b = j + k_near
        if b > union.size:
            b = union.size
        if b - a >= 3:
            local = union[a:b]
            sigma = c_sigma * np.median(np.diff(local))
        else:
            sigma = sigma_floor
        if bp_lo > 0.0 and lam < bp_lo:
            cap1 = 0.5 * (bp_lo - lam)
            cap2 = 0.5 * (lam if lam > sigma_floor else sigma_floor)
            if cap1 < sigma:
                sigma = cap1
            if cap2 < sigma:
                sigma = cap2
        if sigma < sigma_floor:
            sigma = sigma_floor
        acc = 0.0
        for v in mu_m:
            acc += 0.5 * math.erfc((v - lam) / sigma * inv_sqrt2)
        for v in mu_p:
            acc -= 0.5 * math.erfc((v - lam) / sigma * inv_sqrt2)
        out[i] = acc
    return out


if HAS_NUMBA:
    rgf_trace = njit(cache=True)(_rgf_trace_impl)
    smoothed_count = njit(cache=True)(_smoothed_count_impl)
else:
    rgf_trace = _rgf_trace_impl
    smoothed_count = _smoothed_count_impl

# numpy reference paths, importable regardless of jit state
rgf_trace_numpy = _rgf_trace_impl
smoothed_count_numpy = _smoothed_count_impl
