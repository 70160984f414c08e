"""Pure-numpy implementations of the hot gather/scatter kernels.

These mirror the compiled versions in ``_ckernels`` exactly: per output
cell the floating-point accumulation order is identical, so both backends
produce bit-equal results and can be swapped freely.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided


def im2col(padded: np.ndarray, kh: int, kw: int, stride: int, dilation: int,
           out_h: int, out_w: int) -> np.ndarray:
    """Gather conv patches into a [N, C*kh*kw, out_h*out_w] matrix."""
    n, c, _, _ = padded.shape
    sn, sc, sh, sw = padded.strides
    windows = as_strided(
        padded,
        shape=(n, c, kh, kw, out_h, out_w),
        strides=(sn, sc, sh * dilation, sw * dilation, sh * stride, sw * stride),
        writeable=False,
    )
    return windows.reshape(n, c * kh * kw, out_h * out_w)


def col2im(cols: np.ndarray, n: int, c: int, ph: int, pw: int, kh: int, kw: int,
           stride: int, dilation: int, out_h: int, out_w: int) -> np.ndarray:
    """Scatter-add column gradients back onto the padded input grid."""
    grad = np.zeros((n, c, ph, pw), dtype=cols.dtype)
    cols6 = cols.reshape(n, c, kh, kw, out_h, out_w)
    for p in range(kh):
        ys = slice(p * dilation, p * dilation + (out_h - 1) * stride + 1, stride)
        for q in range(kw):
            xs = slice(q * dilation, q * dilation + (out_w - 1) * stride + 1, stride)
            grad[:, :, ys, xs] += cols6[:, :, p, q]
    return grad


def maxpool2x2_forward(x: np.ndarray):
    """Return (pooled, argmax codes 0..3 in row-major window order)."""
    n, c, h, w = x.shape
    xr = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    arg = xr.argmax(axis=4)
    out = np.take_along_axis(xr, arg[..., None], axis=4)[..., 0]
    return np.ascontiguousarray(out), arg.astype(np.uint8)


def maxpool2x2_backward(g: np.ndarray, arg: np.ndarray) -> np.ndarray:
    n, c, h2, w2 = g.shape
    gi = np.zeros((n, c, h2, w2, 4), dtype=g.dtype)
    np.put_along_axis(gi, arg[..., None].astype(np.intp), g[..., None], axis=4)
    return np.ascontiguousarray(
        gi.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2 * 2, w2 * 2)
    )


def upsample2x_forward(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    return np.broadcast_to(x[:, :, :, None, :, None], (n, c, h, 2, w, 2)).reshape(n, c, 2 * h, 2 * w)


def upsample2x_backward(g: np.ndarray) -> np.ndarray:
    n, c, h2, w2 = g.shape
    g6 = g.reshape(n, c, h2 // 2, 2, w2 // 2, 2)
    # explicit left-to-right adds keep the accumulation order of the C loop
    return ((g6[:, :, :, 0, :, 0] + g6[:, :, :, 0, :, 1]) + g6[:, :, :, 1, :, 0]) + g6[:, :, :, 1, :, 1]
