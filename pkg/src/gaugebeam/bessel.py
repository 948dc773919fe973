"""
Bessel functions of the first kind and integer order.

Small arguments use the power series; elsewhere Miller's backward
recurrence is normalised with the identity J_0 + 2 (J_2 + J_4 + ...) = 1.
Both paths are vectorised over the argument.
"""
from __future__ import annotations

import math

import numpy as np

_SERIES_MAX = 2.0
_SERIES_TERMS = 40
_BIG = 1e250


def _series(n, x):
    half = 0.5 * x
    term = half ** n / math.factorial(n)
    total = term.copy()
    q = -half * half
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + n))
        total = total + term
    return total


def _miller(nmax, x):
    """J_0..J_nmax for positive x, shape (nmax + 1,) + x.shape."""
    top = max(nmax, float(np.max(x)))
    m = 2 * ((int(top) + 30 + int(4 * math.sqrt(top))) // 2)
    out = np.zeros((nmax + 1,) + x.shape)
    j_next = np.zeros_like(x)
    j = np.ones_like(x)  # J_m up to scale
    norm = np.zeros_like(x)
    for k in range(m, 0, -1):
        j_prev = (2 * k / x) * j - j_next
        j_next, j = j, j_prev
        order = k - 1
        if order <= nmax:
            out[order] = j
        if order > 0 and order % 2 == 0:
            norm += 2 * j
        big = np.abs(j) > _BIG
        if np.any(big):
            j[big] /= _BIG
            j_next[big] /= _BIG
            norm[big] /= _BIG
            out[:, big] /= _BIG
    norm += j
    return out / norm


def bessel_j_orders(nmax: int, x) -> np.ndarray:
    """J_0(x) .. J_nmax(x) stacked along a new leading axis."""
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    x0 = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("Bessel argument must be finite")
    xa = x0.reshape(-1)
    ax = np.abs(xa)
    out = np.zeros((nmax + 1,) + xa.shape)
    small = ax <= _SERIES_MAX
    if np.any(small):
        xs = ax[small]
        for n in range(nmax + 1):
            out[n][small] = _series(n, xs)
    if np.any(~small):
        out[:, ~small] = _miller(nmax, ax[~small])
    neg = xa < 0
    if np.any(neg):
        for n in range(1, nmax + 1, 2):
            out[n][neg] = -out[n][neg]
    return out.reshape((nmax + 1,) + x0.shape)


def bessel_j(order: int, x):
    """J_order(x); negative orders use J_{-n} = (-1)^n J_n."""
    n = int(order)
    if n != order:
        raise ValueError("only integer orders are supported")
    sign = -1.0 if (n < 0 and n % 2) else 1.0
    vals = bessel_j_orders(abs(n), x)[abs(n)]
    return sign * vals if np.ndim(vals) else float(sign * vals)


def bessel_j_derivative(order: int, x):
    """J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2."""
    return 0.5 * (bessel_j(order - 1, x) - bessel_j(order + 1, x))
