# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: stencil assembly, multilinear interpolation, segment integrals.

Mirrors ``_kernels_py``; see that module for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, sqrt, NAN

cnp.import_array()

BACKEND = "cython"

DEF MAXDIM = 3


cdef inline void _strides(Py_ssize_t[:] dims, Py_ssize_t* stride, int n):
    cdef int a
    stride[n - 1] = 1
    for a in range(n - 2, -1, -1):
        stride[a] = stride[a + 1] * dims[a + 1]


def assemble_stencil(coef, spacing):
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    cdef int n = coef.ndim - 2
    cdef Py_ssize_t[:] dims = np.asarray(coef.shape[:n], dtype=np.intp)
    cdef const double[:, :, ::1] c = coef.reshape(-1, n, n)
    cdef const double[::1] h = np.asarray(spacing, dtype=np.float64)
    cdef Py_ssize_t stride[MAXDIM]
    cdef Py_ssize_t idx[MAXDIM]
    _strides(dims, stride, n)

    cdef Py_ssize_t total = c.shape[0]
    cdef Py_ssize_t interior = 1
    cdef int a, b, sa, sb, k
    for a in range(n):
        interior *= dims[a] - 2
    cdef Py_ssize_t per_node = 1 + 2 * n + 4 * n * (n - 1)
    rows_arr = np.empty(interior * per_node, dtype=np.int64)
    cols_arr = np.empty(interior * per_node, dtype=np.int64)
    vals_arr = np.empty(interior * per_node, dtype=np.float64)
    cdef long long[::1] rows = rows_arr
    cdef long long[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr

    cdef Py_ssize_t p, q, rem, e = 0, nb
    cdef double center, face, w, cab
    cdef bint inside
    for p in range(total):
        rem = p
        inside = True
        for a in range(n):
            idx[a] = rem // stride[a]
            rem = rem - idx[a] * stride[a]
            if idx[a] == 0 or idx[a] == dims[a] - 1:
                inside = False
        if not inside:
            continue
        center = 0.0
        q = e
        e += 1
        for a in range(n):
            for k in range(2):
                sa = 1 - 2 * k
                nb = p + sa * stride[a]
                face = 0.5 * (c[p, a, a] + c[nb, a, a]) / (h[a] * h[a])
                center += face
                rows[e] = p
                cols[e] = nb
                vals[e] = -face
                e += 1
        rows[q] = p
        cols[q] = p
        vals[q] = center
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                w = 1.0 / (4.0 * h[a] * h[b])
                for k in range(4):
                    sa = 1 - 2 * (k // 2)
                    sb = 1 - 2 * (k % 2)
                    nb = p + sa * stride[a]
                    cab = c[nb, a, b]
                    rows[e] = p
                    cols[e] = nb + sb * stride[b]
                    vals[e] = -sa * sb * w * cab
                    e += 1
    return rows_arr, cols_arr, vals_arr


cdef inline bint _interp(const double[:, ::1] v, Py_ssize_t* dims, Py_ssize_t* stride, int n,
                         double* origin, double* h, double* x, double* out, int C) nogil:
    cdef double s[MAXDIM]
    cdef double frac[MAXDIM]
    cdef Py_ssize_t i0[MAXDIM]
    cdef int a, corner, j, bit
    cdef double w
    cdef Py_ssize_t node
    cdef double tol = 1e-9
    for a in range(n):
        s[a] = (x[a] - origin[a]) / h[a]
        if s[a] < -tol or s[a] > dims[a] - 1 + tol:
            return False
        i0[a] = <Py_ssize_t> floor(s[a])
        if i0[a] < 0:
            i0[a] = 0
        if i0[a] > dims[a] - 2:
            i0[a] = dims[a] - 2
        frac[a] = s[a] - i0[a]
    for j in range(C):
        out[j] = 0.0
    for corner in range(1 << n):
        w = 1.0
        node = 0
        for a in range(n):
            bit = (corner >> (n - 1 - a)) & 1
            if bit:
                w *= frac[a]
            else:
                w *= 1.0 - frac[a]
            node += (i0[a] + bit) * stride[a]
        for j in range(C):
            out[j] += w * v[node, j]
    return True


def interpolate(values, origin, spacing, points):
    points_arr = np.atleast_2d(np.asarray(points, dtype=np.float64))
    cdef int n = points_arr.shape[1]
    values = np.asarray(values, dtype=np.float64)
    dims_t = values.shape[:n]
    cdef const double[:, ::1] v = np.ascontiguousarray(values.reshape(int(np.prod(dims_t)), -1))
    cdef int C = v.shape[1]
    cdef const double[:, ::1] pts = np.ascontiguousarray(points_arr)
    out_arr = np.empty((pts.shape[0], C), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t dims[MAXDIM]
    cdef Py_ssize_t stride[MAXDIM]
    cdef double org[MAXDIM]
    cdef double h[MAXDIM]
    cdef int a, j
    for a in range(n):
        dims[a] = dims_t[a]
        org[a] = origin[a]
        h[a] = spacing[a]
    stride[n - 1] = 1
    for a in range(n - 2, -1, -1):
        stride[a] = stride[a + 1] * dims[a + 1]
    cdef Py_ssize_t p
    with nogil:
        for p in range(pts.shape[0]):
            if not _interp(v, dims, stride, n, org, h, &pts[p, 0], &out[p, 0], C):
                for j in range(C):
                    out[p, j] = NAN
    return out_arr


def integrate_segments(F, origin, spacing, x0, targets):
    tgt_arr = np.ascontiguousarray(np.atleast_2d(np.asarray(targets, dtype=np.float64)))
    cdef int n = tgt_arr.shape[1]
    F = np.asarray(F, dtype=np.float64)
    dims_t = F.shape[:n]
    cdef const double[:, ::1] v = np.ascontiguousarray(F.reshape(int(np.prod(dims_t)), n))
    cdef const double[:, ::1] tgt = tgt_arr
    out_arr = np.empty(tgt.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t dims[MAXDIM]
    cdef Py_ssize_t stride[MAXDIM]
    cdef double org[MAXDIM]
    cdef double h[MAXDIM]
    cdef double start[MAXDIM]
    cdef double delta[MAXDIM]
    cdef double pt[MAXDIM]
    cdef double f[MAXDIM]
    cdef double hmin = min(spacing)
    cdef int a
    for a in range(n):
        dims[a] = dims_t[a]
        org[a] = origin[a]
        h[a] = spacing[a]
        start[a] = x0[a]
    stride[n - 1] = 1
    for a in range(n - 2, -1, -1):
        stride[a] = stride[a + 1] * dims[a + 1]
    cdef Py_ssize_t p, k, K
    cdef double length, t, acc, wk, dot
    with nogil:
        for p in range(tgt.shape[0]):
            length = 0.0
            for a in range(n):
                delta[a] = tgt[p, a] - start[a]
                length += delta[a] * delta[a]
            length = sqrt(length)
            K = <Py_ssize_t> ceil(length / hmin - 1e-9)
            if K < 1:
                K = 1
            acc = 0.0
            for k in range(K + 1):
                t = (<double> k) / K
                for a in range(n):
                    pt[a] = start[a] + t * delta[a]
                if not _interp(v, dims, stride, n, org, h, pt, f, n):
                    acc = NAN
                    break
                dot = 0.0
                for a in range(n):
                    dot += f[a] * delta[a]
                wk = 0.5 if (k == 0 or k == K) else 1.0
                acc += wk * dot
            out[p] = acc / K
    return out_arr
