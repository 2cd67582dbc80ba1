# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution/pooling kernels (float64, stride 1, no padding).

Loop orders mirror ``_kernels_py`` so both backends agree bit for bit.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def im2col(const double[:, :, :, ::1] x, int kh, int kw):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = h - kh + 1, wo = w - kw + 1
    out = np.empty((n * ho * wo, c * kh * kw), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t b, y, xx, ch, i, j, row, col
    with nogil:
        for b in range(n):
            for y in range(ho):
                for xx in range(wo):
                    row = (b * ho + y) * wo + xx
                    col = 0
                    for ch in range(c):
                        for i in range(kh):
                            for j in range(kw):
                                o[row, col] = x[b, ch, y + i, xx + j]
                                col += 1
    return out


def col2im(const double[:, ::1] cols, shape, int kh, int kw):
    cdef Py_ssize_t n = shape[0], c = shape[1], h = shape[2], w = shape[3]
    cdef Py_ssize_t ho = h - kh + 1, wo = w - kw + 1
    dx = np.zeros((n, c, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] d = dx
    cdef Py_ssize_t b, y, xx, ch, i, j, base
    with nogil:
        for b in range(n):
            for ch in range(c):
                for i in range(kh):
                    for j in range(kw):
                        for y in range(ho):
                            base = (b * ho + y) * wo
                            for xx in range(wo):
                                d[b, ch, y + i, xx + j] += cols[base + xx, (ch * kh + i) * kw + j]
    return dx


def maxpool_forward(const double[:, :, :, ::1] x, int k):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1]
    cdef Py_ssize_t ho = x.shape[2] // k, wo = x.shape[3] // k
    out = np.empty((n, c, ho, wo), dtype=np.float64)
    arg = np.empty((n, c, ho, wo), dtype=np.intp)
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t[:, :, :, ::1] a = arg
    cdef Py_ssize_t b, ch, y, xx, i, j, best
    cdef double v, m
    with nogil:
        for b in range(n):
            for ch in range(c):
                for y in range(ho):
                    for xx in range(wo):
                        m = x[b, ch, y * k, xx * k]
                        best = 0
                        for i in range(k):
                            for j in range(k):
                                v = x[b, ch, y * k + i, xx * k + j]
                                if v > m:
                                    m = v
                                    best = i * k + j
                        o[b, ch, y, xx] = m
                        a[b, ch, y, xx] = best
    return out, arg


def maxpool_backward(const double[:, :, :, ::1] dout, const Py_ssize_t[:, :, :, ::1] arg, int k, shape):
    cdef Py_ssize_t n = dout.shape[0], c = dout.shape[1], ho = dout.shape[2], wo = dout.shape[3]
    dx = np.zeros(tuple(shape), dtype=np.float64)
    cdef double[:, :, :, ::1] d = dx
    cdef Py_ssize_t b, ch, y, xx, off
    with nogil:
        for b in range(n):
            for ch in range(c):
                for y in range(ho):
                    for xx in range(wo):
                        off = arg[b, ch, y, xx]
                        d[b, ch, y * k + off // k, xx * k + off % k] = dout[b, ch, y, xx]
    return dx
