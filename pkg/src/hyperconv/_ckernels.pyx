# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gather/scatter kernels for convolution, pooling and upsampling.

Same contracts and per-cell accumulation order as ``_kernels_py``; the two
backends are interchangeable bit-for-bit.
"""

import numpy as np

ctypedef fused real:
    float
    double


def im2col(real[:, :, :, ::1] padded, int kh, int kw, int stride, int dilation,
           int out_h, int out_w):
    cdef int n = padded.shape[0], c = padded.shape[1]
    cdef int L = out_h * out_w
    if real is float:
        cols_arr = np.empty((n, c * kh * kw, L), dtype=np.float32)
    else:
        cols_arr = np.empty((n, c * kh * kw, L), dtype=np.float64)
    cdef real[:, :, ::1] cols = cols_arr
    cdef int i, j, p, q, y, x, row
    for i in range(n):
        for j in range(c):
            for p in range(kh):
                for q in range(kw):
                    row = (j * kh + p) * kw + q
                    for y in range(out_h):
                        for x in range(out_w):
                            cols[i, row, y * out_w + x] = padded[i, j, p * dilation + y * stride,
                                                                 q * dilation + x * stride]
    return cols_arr


def col2im(real[:, :, ::1] cols, int n, int c, int ph, int pw, int kh, int kw,
           int stride, int dilation, int out_h, int out_w):
    if real is float:
        grad_arr = np.zeros((n, c, ph, pw), dtype=np.float32)
    else:
        grad_arr = np.zeros((n, c, ph, pw), dtype=np.float64)
    cdef real[:, :, :, ::1] grad = grad_arr
    cdef int i, j, p, q, y, x, row
    for i in range(n):
        for j in range(c):
            for p in range(kh):
                for q in range(kw):
                    row = (j * kh + p) * kw + q
                    for y in range(out_h):
                        for x in range(out_w):
                            grad[i, j, p * dilation + y * stride, q * dilation + x * stride] += \
                                cols[i, row, y * out_w + x]
    return grad_arr


def maxpool2x2_forward(real[:, :, :, ::1] x):
    cdef int n = x.shape[0], c = x.shape[1], h2 = x.shape[2] // 2, w2 = x.shape[3] // 2
    if real is float:
        out_arr = np.empty((n, c, h2, w2), dtype=np.float32)
    else:
        out_arr = np.empty((n, c, h2, w2), dtype=np.float64)
    arg_arr = np.empty((n, c, h2, w2), dtype=np.uint8)
    cdef real[:, :, :, ::1] out = out_arr
    cdef unsigned char[:, :, :, ::1] arg = arg_arr
    cdef int i, j, y, x0, a, b
    cdef real best, v
    cdef unsigned char code
    for i in range(n):
        for j in range(c):
            for y in range(h2):
                for x0 in range(w2):
                    best = x[i, j, 2 * y, 2 * x0]
                    code = 0
                    for a in range(2):
                        for b in range(2):
                            v = x[i, j, 2 * y + a, 2 * x0 + b]
                            if v > best:
                                best = v
                                code = <unsigned char> (a * 2 + b)
                    out[i, j, y, x0] = best
                    arg[i, j, y, x0] = code
    return out_arr, arg_arr


def maxpool2x2_backward(real[:, :, :, ::1] g, unsigned char[:, :, :, ::1] arg):
    cdef int n = g.shape[0], c = g.shape[1], h2 = g.shape[2], w2 = g.shape[3]
    if real is float:
        gi_arr = np.zeros((n, c, 2 * h2, 2 * w2), dtype=np.float32)
    else:
        gi_arr = np.zeros((n, c, 2 * h2, 2 * w2), dtype=np.float64)
    cdef real[:, :, :, ::1] gi = gi_arr
    cdef int i, j, y, x0, code
    for i in range(n):
        for j in range(c):
            for y in range(h2):
                for x0 in range(w2):
                    code = arg[i, j, y, x0]
                    gi[i, j, 2 * y + code // 2, 2 * x0 + code % 2] = g[i, j, y, x0]
    return gi_arr


def upsample2x_forward(real[:, :, :, ::1] x):
    cdef int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    if real is float:
        out_arr = np.empty((n, c, 2 * h, 2 * w), dtype=np.float32)
    else:
        out_arr = np.empty((n, c, 2 * h, 2 * w), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_arr
    cdef int i, j, y, x0
    cdef real v
    for i in range(n):
        for j in range(c):
            for y in range(h):
                for x0 in range(w):
                    v = x[i, j, y, x0]
                    out[i, j, 2 * y, 2 * x0] = v
                    out[i, j, 2 * y, 2 * x0 + 1] = v
                    out[i, j, 2 * y + 1, 2 * x0] = v
                    out[i, j, 2 * y + 1, 2 * x0 + 1] = v
    return out_arr


def upsample2x_backward(real[:, :, :, ::1] g):
    cdef int n = g.shape[0], c = g.shape[1], h = g.shape[2] // 2, w = g.shape[3] // 2
    if real is float:
        gi_arr = np.empty((n, c, h, w), dtype=np.float32)
    else:
        gi_arr = np.empty((n, c, h, w), dtype=np.float64)
    cdef real[:, :, :, ::1] gi = gi_arr
    cdef int i, j, y, x0
    cdef real acc
    for i in range(n):
        for j in range(c):
            for y in range(h):
                for x0 in range(w):
                    acc = g[i, j, 2 * y, 2 * x0]
                    acc = acc + g[i, j, 2 * y, 2 * x0 + 1]
                    acc = acc + g[i, j, 2 * y + 1, 2 * x0]
                    acc = acc + g[i, j, 2 * y + 1, 2 * x0 + 1]
                    gi[i, j, y, x0] = acc
    return gi_arr
