# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled interpreter for expression tapes."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, tan, exp, log, sqrt, isfinite, pow

cnp.import_array()


def run_tape(int[::1] ops, int[::1] a, int[::1] b, double[::1] consts,
             int[::1] out, double[:, ::1] x):
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t npts = x.shape[0]
    cdef Py_ssize_t nout = out.shape[0]
    cdef Py_ssize_t row, i, j
    cdef int op, e
    cdef double v, base
    res_arr = np.empty((npts, nout), dtype=np.float64)
    cdef double[:, ::1] res = res_arr
    reg_arr = np.empty(n if n > 0 else 1, dtype=np.float64)
    cdef double[::1] r = reg_arr
    for row in range(npts):
        for i in range(n):
            op = ops[i]
            if op == 2:
                v = r[a[i]] + r[b[i]]
            elif op == 3:
                v = r[a[i]] * r[b[i]]
            elif op == 0:
                v = consts[a[i]]
            elif op == 1:
                v = x[row, a[i]]
            elif op == 4:
                if r[b[i]] == 0.0:
                    return res_arr, row
                v = r[a[i]] / r[b[i]]
            elif op == 5:
                e = b[i]
                base = r[a[i]]
                if e >= 0:
                    v = pow(base, <double>e)
                else:
                    if base == 0.0:
                        return res_arr, row
                    v = 1.0 / pow(base, <double>(-e))
            elif op == 6:
                v = sin(r[a[i]])
            elif op == 7:
                v = cos(r[a[i]])
            elif op == 8:
                v = tan(r[a[i]])
            elif op == 9:
                v = exp(r[a[i]])
            elif op == 10:
                if r[a[i]] <= 0.0:
                    return res_arr, row
                v = log(r[a[i]])
            else:
                if r[a[i]] < 0.0:
                    return res_arr, row
                v = sqrt(r[a[i]])
            if not isfinite(v):
                return res_arr, row
            r[i] = v
        for j in range(nout):
            res[row, j] = r[out[j]]
    return res_arr, -1
