"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``IMPULSIVE_NO_NUMBA`` is unset (or ``0``). Both paths are always
importable under explicit names so they can be compared and benchmarked.
"""
import math
import os

import numpy as np

SNAP_TOL = 1e-9
SQRT_E = math.exp(0.5)

_disabled = os.environ.get("IMPULSIVE_NO_NUMBA", "").lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("numba disabled by IMPULSIVE_NO_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


def _step_count(length, hmax):
    # n-1 full steps of hmax, last step in (0, hmax*(1+1e-9)]
    if length <= 0.0:
        return 0
    return max(1, int(math.ceil(length / hmax - 1e-9)))


# ---------------------------------------------------------------- rk4 flow


@njit(cache=True)
def _rk4_affine_numba(x0, u, input_gain, length, hmax):
    if length <= 0.0:
        n = 0
    else:
        n = max(1, int(math.ceil(length / hmax - 1e-9)))
    ts = np.empty(n + 1)
    xs = np.empty(n + 1)
    ts[0] = 0.0
    xs[0] = x0
    x = x0
    drive = input_gain * u
    for i in range(n):
        if i < n - 1:
            h = hmax
        else:
            h = length - (n - 1) * hmax
        k1 = -x + drive
        k2 = -(x + 0.5 * h * k1) + drive
        k3 = -(x + 0.5 * h * k2) + drive
        k4 = -(x + h * k3) + drive
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xs[i + 1] = x
        ts[i + 1] = length if i == n - 1 else (i + 1) * hmax
    return ts, xs


def _rk4_growth(h):
    # classical RK4 amplification factor for x' = -x
    return 1.0 - h + h * h / 2.0 - h ** 3 / 6.0 + h ** 4 / 24.0


def _rk4_affine_numpy(x0, u, input_gain, length, hmax):
    n = _step_count(length, hmax)
    ts = np.empty(n + 1)
    xs = np.empty(n + 1)
    ts[0] = 0.0
    xs[0] = x0
    if n == 0:
        return ts, xs
    eq = input_gain * u
    r_full = _rk4_growth(hmax)
    h_last = length - (n - 1) * hmax
    powers = np.power(r_full, np.arange(1, n))
    xs[1:n] = eq + (x0 - eq) * powers
    ts[1:n] = np.arange(1, n) * hmax
    before_last = xs[n - 1]
    xs[n] = eq + (before_last - eq) * _rk4_growth(h_last)
    ts[n] = length
    return ts, xs


# ---------------------------------------------------------------- sawtooth


@njit(cache=True)
def _snap_numba(v):
    twice = 2.0 * v
    nearest = math.floor(twice + 0.5)
    if abs(twice - nearest) <= 2.0 * SNAP_TOL * max(1.0, abs(v)):
        return nearest / 2.0
    return v


@njit(cache=True)
def _bar_h_numba(r):
    out = np.empty(r.shape[0])
    for i in range(r.shape[0]):
        ri = r[i]
        if ri == 0.0:
            out[i] = 0.0
            continue
        lr = _snap_numba(math.log(ri))
        c = math.ceil(lr)
        if lr > 0.0:
            out[i] = ri
        elif c - 0.5 < lr:
            out[i] = math.exp(c)
        else:
            out[i] = (1.0 + SQRT_E) * ri - math.exp(c - 0.5)
    return out


def _bar_h_numpy(r):
    r = np.asarray(r, dtype=float)
    # r == 0 gives -inf logs; those lanes are overwritten at the end
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(r)
        twice = 2.0 * lr
        nearest = np.floor(twice + 0.5)
        close = np.abs(twice - nearest) <= 2.0 * SNAP_TOL * np.maximum(1.0, np.abs(lr))
        lr = np.where(close, nearest / 2.0, lr)
        c = np.ceil(lr)
        out = np.where(c - 0.5 < lr, np.exp(c), (1.0 + SQRT_E) * r - np.exp(c - 0.5))
    out = np.where(lr > 0.0, r, out)
    return np.where(r == 0.0, 0.0, out)


if HAS_NUMBA:
    rk4_affine = _rk4_affine_numba

    def bar_h_array(r):
        return _bar_h_numba(np.ascontiguousarray(r, dtype=np.float64))
else:
    rk4_affine = _rk4_affine_numpy
    bar_h_array = _bar_h_numpy

BACKEND = "numba" if HAS_NUMBA else "numpy"
