# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: first-order modal filters and Hankel anti-diagonal sums."""
import numpy as np

cimport cython


def causal_filter(const double[:, :, :] x, const double[::1] a):
    """y[k, m, 0] = 0, y[k, m, t + 1] = a[k] * y[k, m, t] + x[k, m, t]."""
    cdef Py_ssize_t r = x.shape[0], nm = x.shape[1], nt = x.shape[2]
    cdef Py_ssize_t k, m, t
    cdef double ak, acc
    if a.shape[0] != r:
        raise ValueError("one pole per leading slice expected")
    out = np.zeros((r, nm, nt), dtype=np.float64)
    cdef double[:, :, ::1] y = out
    for k in range(r):
        ak = a[k]
        for m in range(nm):
            acc = 0.0
            for t in range(nt - 1):
                acc = ak * acc + x[k, m, t]
                y[k, m, t + 1] = acc
    return out


def anticausal_filter(const double[:, :, :] x, const double[::1] a):
    """Adjoint of causal_filter: y[k, m, T-1] = 0, y[k, m, s] = a[k] y[k, m, s+1] + x[k, m, s+1]."""
    cdef Py_ssize_t r = x.shape[0], nm = x.shape[1], nt = x.shape[2]
    cdef Py_ssize_t k, m, s
    cdef double ak, acc
    if a.shape[0] != r:
        raise ValueError("one pole per leading slice expected")
    out = np.zeros((r, nm, nt), dtype=np.float64)
    cdef double[:, :, ::1] y = out
    for k in range(r):
        ak = a[k]
        for m in range(nm):
            acc = 0.0
            for s in range(nt - 2, -1, -1):
                acc = ak * acc + x[k, m, s + 1]
                y[k, m, s] = acc
    return out


def antidiag_sum(const double[:, :, :, :] blocks):
    """Sum (L+1) x (L+1) grid of blocks, indexed (i, row, j, col), along i + j."""
    cdef Py_ssize_t p = blocks.shape[0], ny = blocks.shape[1]
    cdef Py_ssize_t q = blocks.shape[2], nu = blocks.shape[3]
    cdef Py_ssize_t i, j, a, b
    out = np.zeros((p + q - 1, ny, nu), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    for i in range(p):
        for a in range(ny):
            for j in range(q):
                for b in range(nu):
                    o[i + j, a, b] += blocks[i, a, j, b]
    return out


def modal_terms(u_in, y_in, a_in, b_in, c_in):
    """Squared residual and raw gradient correlations of a sum of first-order modes.

    With modal sequences ``s_j = causal_filter(u b_j, a_j)`` and residual
    ``res = y - sum_j c_j s_j`` this returns ``(sum res^2, ga, gb, gc)`` where
    ``ga[j] = sum e_j * causal_filter(s_j, a_j)``, ``gb[j] = sum anticausal_filter(e_j, a_j) u``
    and ``gc = sum res s^T``, using ``e_j = res c_j``.
    """
    cdef const double[:, :, ::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef const double[:, :, ::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(c_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], nt = u.shape[1], nu = u.shape[2], ny = y.shape[2]
    cdef Py_ssize_t r = a.shape[0]
    cdef Py_ssize_t i, t, j, k
    cdef double sse = 0.0, v
    if b.shape[0] != r or b.shape[1] != nu or c.shape[0] != ny or c.shape[1] != r:
        raise ValueError("parameter shapes do not match the data")
    if y.shape[0] != n or y.shape[1] != nt:
        raise ValueError("inputs and outputs disagree on (N, T)")
    ga_arr = np.zeros(r)
    gb_arr = np.zeros((r, nu))
    gc_arr = np.zeros((ny, r))
    # time-major scratch so the per-mode recursions run side by side
    s_arr = np.empty((nt, r))
    e_arr = np.empty((nt, r))
    res_arr = np.empty((nt, ny))
    acc_arr = np.empty(r)
    cdef double[::1] ga = ga_arr, acc = acc_arr
    cdef double[:, ::1] gb = gb_arr, gc = gc_arr, s = s_arr, e = e_arr, res = res_arr
    for i in range(n):
        # modal sequences
        for j in range(r):
            acc[j] = 0.0
            s[0, j] = 0.0
        for t in range(nt - 1):
            for j in range(r):
                v = 0.0
                for k in range(nu):
                    v = v + b[j, k] * u[i, t, k]
                acc[j] = a[j] * acc[j] + v
                s[t + 1, j] = acc[j]
        # residual, its squared norm and the output-side correlation
        for t in range(nt):
            for k in range(ny):
                v = y[i, t, k]
                for j in range(r):
                    v = v - c[k, j] * s[t, j]
                res[t, k] = v
                sse = sse + v * v
                for j in range(r):
                    gc[k, j] += v * s[t, j]
            for j in range(r):
                v = 0.0
                for k in range(ny):
                    v = v + res[t, k] * c[k, j]
                e[t, j] = v
        # pole derivative: d s / d a = causal_filter(s)
        for j in range(r):
            acc[j] = 0.0
        for t in range(nt - 1):
            for j in range(r):
                acc[j] = a[j] * acc[j] + s[t, j]
                ga[j] += e[t + 1, j] * acc[j]
        # input-side correlation through the adjoint filter
        for j in range(r):
            acc[j] = 0.0
        for t in range(nt - 2, -1, -1):
            for j in range(r):
                acc[j] = a[j] * acc[j] + e[t + 1, j]
                for k in range(nu):
                    gb[j, k] += acc[j] * u[i, t, k]
    return sse, ga_arr, gb_arr, gc_arr
