"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and the same arithmetic, so both backends agree to rounding.
"""

from __future__ import annotations

from itertools import product

import numpy as np

BACKEND = "python"


def assemble_stencil(coef, spacing):
    """COO triplets of ``-div(C grad u)`` at every interior node.

    Parameters
    ----------
    coef : ndarray, shape ``(*dims, n, n)``
        Symmetric coefficient per node.
    spacing : sequence of float

    Returns
    -------
    rows, cols : int64 arrays of flat full-grid node indices
    vals : float64 array
        Duplicate ``(row, col)`` pairs are meant to be summed.
    """
    coef = np.ascontiguousarray(coef, dtype=float)
    dims = coef.shape[:-2]
    n = len(dims)
    h = np.asarray(spacing, dtype=float)
    flat = np.arange(int(np.prod(dims))).reshape(dims)
    inner = tuple(slice(1, d - 1) for d in dims)
    rows_c = flat[inner].ravel()

    def shifted(arr, off):
        return arr[tuple(slice(1 + o, d - 1 + o) for o, d in zip(off, dims))]

    rows, cols, vals = [], [], []
    center = np.zeros(rows_c.shape)
    for a in range(n):
        caa = coef[..., a, a]
        for s in (1, -1):
            off = [0] * n
            off[a] = s
            face = 0.5 * (caa[inner] + shifted(caa, off)).ravel() / h[a] ** 2
            center += face
            rows.append(rows_c)
            cols.append(shifted(flat, off).ravel())
            vals.append(-face)
    rows.insert(0, rows_c)
    cols.insert(0, rows_c)
    vals.insert(0, center)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            w = 1.0 / (4.0 * h[a] * h[b])
            for sa, sb in product((1, -1), (1, -1)):
                off_a = [0] * n
                off_a[a] = sa
                off = list(off_a)
                off[b] = sb
                cab = shifted(coef[..., a, b], off_a).ravel()
                rows.append(rows_c)
                cols.append(shifted(flat, off).ravel())
                vals.append(-sa * sb * w * cab)
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals))


def interpolate(values, origin, spacing, points):
    """Multilinear interpolation of node data at arbitrary points.

    Parameters
    ----------
    values : ndarray, shape ``(*dims, C)``
    points : ndarray, shape ``(P, n)``

    Returns
    -------
    out : ndarray ``(P, C)``
        NaN rows for points outside the grid box.
    """
    values = np.asarray(values, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[1]
    dims = values.shape[:n]
    comps = values.reshape(dims + (-1,))
    s = (points - np.asarray(origin)) / np.asarray(spacing)
    tol = 1e-9
    inside = np.all((s >= -tol) & (s <= np.asarray(dims) - 1 + tol), axis=1)
    i0 = np.clip(np.floor(s).astype(np.int64), 0, np.asarray(dims) - 2)
    frac = s - i0
    out = np.zeros((points.shape[0], comps.shape[-1]))
    for corner in product((0, 1), repeat=n):
        w = np.ones(points.shape[0])
        idx = []
        for a, c in enumerate(corner):
            w = w * (frac[:, a] if c else 1.0 - frac[:, a])
            idx.append(i0[:, a] + c)
        out += w[:, None] * comps[tuple(idx)]
    out[~inside] = np.nan
    return out


def _segment_steps(lengths, hmin):
    return np.maximum(1, np.ceil(lengths / hmin - 1e-9)).astype(np.int64)


def integrate_segments(F, origin, spacing, x0, targets):
    """Trapezoid line integrals ``int_0^1 (x - x0) . F(x0 + t (x - x0)) dt``.

    Each segment uses ``ceil(|x - x0| / min(spacing))`` sub-intervals and
    multilinear interpolation of ``F``.

    Parameters
    ----------
    F : ndarray ``(*dims, n)``
    x0 : ndarray ``(n,)``
    targets : ndarray ``(P, n)``

    Returns
    -------
    ndarray ``(P,)``
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    x0 = np.asarray(x0, dtype=float)
    delta = targets - x0
    K = _segment_steps(np.linalg.norm(delta, axis=1), min(spacing))
    total = np.zeros(targets.shape[0])
    for k in range(int(K.max()) + 1):
        live = k <= K
        if not np.any(live):
            break
        t = k / K[live]
        pts = x0 + t[:, None] * delta[live]
        f = interpolate(F, origin, spacing, pts)
        w = np.where((k == 0) | (k == K[live]), 0.5, 1.0)
        total[live] += w * np.einsum("pa,pa->p", f, delta[live])
    return total / K
