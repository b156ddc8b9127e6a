"""Pure-numpy implementations of the hot per-row reduction kernels.

All functions expect C-contiguous float64 inputs:

    rows : (m, n) measurement vectors, one per row
    y2   : (m,)  squared measurements
    z    : (n,)  evaluation point

The compiled module ``prlandscape._core`` provides the same signatures
with fused single-pass loops; ``prlandscape._backend`` picks one at import.
"""

import numpy as np


def residuals(rows, y2, z):
    s = rows @ z
    return s * s - y2


def loss(rows, y2, z):
    r = residuals(rows, y2, z)
    return float(r @ r) / rows.shape[0]


def loss_gradient(rows, y2, z):
    m = rows.shape[0]
    s = rows @ z
    r = s * s - y2
    g = rows.T @ (r * s)
    g *= 4.0 / m
    return float(r @ r) / m, g


def quad_form(rows, y2, z, xi):
    m = rows.shape[0]
    s = rows @ z
    u = rows @ xi
    return 4.0 * float((u * u) @ (3.0 * s * s - y2)) / m


def hvp(rows, y2, z, v):
    m = rows.shape[0]
    s = rows @ z
    u = rows @ v
    out = rows.T @ ((3.0 * s * s - y2) * u)
    out *= 4.0 / m
    return out


def moments(rows, x, zhat):
    """Fourth-order row statistics against the direction pair (zhat, x).

    Returns (A, B, A1, C1, D) with s = rows@zhat, t = rows@x:
    A = mean s^4, B = mean s^2 t^2, A1 = mean t s^3,
    C1 = mean s t^3, D = mean t^4.
    """
    m = rows.shape[0]
    s = rows @ zhat
    t = rows @ x
    s2 = s * s
    t2 = t * t
    a = float(s2 @ s2) / m
    b = float(s2 @ t2) / m
    a1 = float((s2 * s) @ t) / m
    c1 = float(s @ (t2 * t)) / m
    d = float(t2 @ t2) / m
    return a, b, a1, c1, d
