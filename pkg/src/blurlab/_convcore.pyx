# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution core: strided 2-D cross-correlation and its adjoints.

Same contracts as _convcore_py; selected at import time by blurlab.backend.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def corr_forward(xp, w, int stride):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(xp, dtype=np.float64)
    cdef double[:, :, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t b = x.shape[0], ci = x.shape[1], hp = x.shape[2], wp = x.shape[3]
    cdef Py_ssize_t co = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3]
    cdef Py_ssize_t ho = (hp - kh) // stride + 1
    cdef Py_ssize_t wo = (wp - kw) // stride + 1
    out_arr = np.zeros((b, co, ho, wo), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, o, c, i, j, h, v
    cdef Py_ssize_t hbase, wbase
    cdef double acc

    with nogil:
        for n in range(b):
            for o in range(co):
                for h in range(ho):
                    hbase = h * stride
                    for v in range(wo):
                        wbase = v * stride
                        acc = 0.0
                        for c in range(ci):
                            for i in range(kh):
                                for j in range(kw):
                                    acc += x[n, c, hbase + i, wbase + j] * wv[o, c, i, j]
                        out[n, o, h, v] = acc
    return out_arr


def corr_backward_input(gy, w, int stride, Py_ssize_t hp, Py_ssize_t wp):
    cdef double[:, :, :, ::1] g = np.ascontiguousarray(gy, dtype=np.float64)
    cdef double[:, :, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t b = g.shape[0], co = g.shape[1], ho = g.shape[2], wo = g.shape[3]
    cdef Py_ssize_t ci = wv.shape[1], kh = wv.shape[2], kw = wv.shape[3]
    gx_arr = np.zeros((b, ci, hp, wp), dtype=np.float64)
    cdef double[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t n, o, c, i, j, h, v
    cdef Py_ssize_t hbase, wbase
    cdef double gval

    with nogil:
        for n in range(b):
            for o in range(co):
                for h in range(ho):
                    hbase = h * stride
                    for v in range(wo):
                        wbase = v * stride
                        gval = g[n, o, h, v]
                        for c in range(ci):
                            for i in range(kh):
                                for j in range(kw):
                                    gx[n, c, hbase + i, wbase + j] += gval * wv[o, c, i, j]
    return gx_arr


def corr_backward_weight(xp, gy, int stride, Py_ssize_t kh, Py_ssize_t kw):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(xp, dtype=np.float64)
    cdef double[:, :, :, ::1] g = np.ascontiguousarray(gy, dtype=np.float64)
    cdef Py_ssize_t b = x.shape[0], ci = x.shape[1], hp = x.shape[2], wp = x.shape[3]
    cdef Py_ssize_t co = g.shape[1], ho = g.shape[2], wo = g.shape[3]
    gw_arr = np.zeros((co, ci, kh, kw), dtype=np.float64)
    cdef double[:, :, :, ::1] gw = gw_arr
    cdef Py_ssize_t n, o, c, i, j, h, v
    cdef Py_ssize_t hbase, wbase
    cdef double gval

    with nogil:
        for n in range(b):
            for o in range(co):
                for h in range(ho):
                    hbase = h * stride
                    for v in range(wo):
                        wbase = v * stride
                        gval = g[n, o, h, v]
                        for c in range(ci):
                            for i in range(kh):
                                for j in range(kw):
                                    gw[o, c, i, j] += gval * x[n, c, hbase + i, wbase + j]
    return gw_arr
