"""Finite-difference weights on arbitrary node sets."""

from __future__ import annotations

import numpy as np


def fd_weights(z: float, x, m: int) -> np.ndarray:
    """Weights for the derivatives 0..m at ``z`` from nodes ``x`` (Fornberg).

    Returns an array of shape (m + 1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def piece_derivative(x, f, order: int = 1, width: int = 5) -> np.ndarray:
    """Derivative of samples ``f`` on one smooth piece, ``width``-point stencils.

    Interior nodes use centred windows; nodes near the ends use windows
    shifted inside the piece, so no data from outside the piece is touched.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    m = x.size
    if m < width:
        raise ValueError(f"piece has {m} nodes, stencil needs {width}")
    k = np.arange(m)
    start = np.clip(k - width // 2, 0, m - width)
    h = np.diff(x)
    out = np.empty(m)
    if np.allclose(h, h[0], rtol=1e-10, atol=0.0):
        unit = np.arange(width, dtype=float)
        table = np.array([fd_weights(float(pos), unit, order)[order] for pos in range(width)])
        w = table[k - start] / h[0] ** order
        idx = start[:, None] + np.arange(width)[None, :]
        out[:] = np.sum(w * f[idx], axis=1)
        return out
    for i in range(m):
        s = start[i]
        w = fd_weights(x[i], x[s : s + width], order)[order]
        out[i] = w @ f[s : s + width]
    return out


def one_sided(x, f, at_end: bool, order: int = 1, width: int = 3) -> float:
    """One-sided derivative at the first (``at_end=False``) or last node."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if at_end:
        xs, fs, z = x[-width:], f[-width:], x[-1]
    else:
        xs, fs, z = x[:width], f[:width], x[0]
    return float(fd_weights(z, xs, order)[order] @ fs)


def extrapolate(x, f, z: float) -> float:
    """Polynomial extrapolation of samples to ``z``."""
    return float(fd_weights(z, x, 0)[0] @ np.asarray(f, dtype=float))
