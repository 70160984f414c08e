"""Neural-net primitives recorded on the autodiff tape.

Convolution uses cross-correlation semantics (no kernel flip) and zero
padding in "same" mode, which preserves H and W at stride 1.
"""

import numpy as np

from .backend import kernels as K
from .rng import stream
from .tensor import Tensor, _record, _wants_grad, as_tensor


def _out_size(size, k, stride, dilation, pad):
    return (size + 2 * pad - dilation * (k - 1) - 1) // stride + 1


def conv2d(x, weight, bias=None, stride: int = 1, dilation: int = 1, padding: str = "same") -> Tensor:
    """2D convolution of [N,C_in,H,W] with a [C_out,C_in,k_h,k_w] kernel."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ValueError(f"conv2d expects 4D input and kernel, got {x.shape} and {weight.shape}")
    n, c_in, h, w = x.shape
    c_out, c_k, kh, kw = weight.shape
    if c_k != c_in:
        raise ValueError(f"kernel expects {c_k} input channels, input has {c_in}")
    if padding == "same":
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValueError("same padding requires odd kernel sizes")
        ph, pw = dilation * (kh - 1) // 2, dilation * (kw - 1) // 2
    elif padding == "valid":
        ph = pw = 0
    else:
        raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")
    out_h = _out_size(h, kh, stride, dilation, ph)
    out_w = _out_size(w, kw, stride, dilation, pw)
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"kernel {kh}x{kw} (dilation {dilation}) does not fit input {h}x{w}")
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise ValueError(f"bias must have shape ({c_out},), got {bias.shape}")

    if kh == 1 and kw == 1 and stride == 1:
        return _conv1x1(x, weight, bias, n, c_in, c_out, h, w)

    xd = np.ascontiguousarray(x.data)
    padded = np.pad(xd, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else xd
    cols = K.im2col(padded, kh, kw, stride, dilation, out_h, out_w)
    w2 = weight.data.reshape(c_out, c_in * kh * kw)
    out_data = np.matmul(w2, cols).reshape(n, c_out, out_h, out_w)
    if bias is not None:
        out_data += bias.data[None, :, None, None]
    out = Tensor(out_data, requires_grad=_wants_grad(x, weight) or (bias is not None and _wants_grad(bias)))

    def backward(g):
        g2 = g.reshape(n, c_out, out_h * out_w)
        if weight.requires_grad:
            gw = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0)
            weight.accumulate_grad(gw.reshape(weight.shape))
        if x.requires_grad:
            gcols = np.matmul(w2.T, g2)
            gp = K.col2im(np.ascontiguousarray(gcols), n, c_in, padded.shape[2], padded.shape[3],
                          kh, kw, stride, dilation, out_h, out_w)
            x.accumulate_grad(gp[:, :, ph:ph + h, pw:pw + w] if (ph or pw) else gp)
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3)))

    return _record(out, backward)


def _conv1x1(x, weight, bias, n, c_in, c_out, h, w):
    w2 = weight.data.reshape(c_out, c_in)
    xf = x.data.reshape(n, c_in, h * w)
    out_data = np.matmul(w2, xf).reshape(n, c_out, h, w)
    if bias is not None:
        out_data += bias.data[None, :, None, None]
    out = Tensor(out_data, requires_grad=_wants_grad(x, weight) or (bias is not None and _wants_grad(bias)))

    def backward(g):
        g2 = g.reshape(n, c_out, h * w)
        if weight.requires_grad:
            gw = np.matmul(g2, xf.transpose(0, 2, 1)).sum(axis=0)
            weight.accumulate_grad(gw.reshape(weight.shape))
        if x.requires_grad:
            x.accumulate_grad(np.matmul(w2.T, g2).reshape(x.shape))
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3)))

    return _record(out, backward)


def max_pool2x2(x) -> Tensor:
    """2x2 max pooling; backward routes gradient to the argmax only."""
    x = as_tensor(x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"max_pool2x2 requires even spatial dims, got {h}x{w}")
    out_data, arg = K.maxpool2x2_forward(np.ascontiguousarray(x.data))
    out = Tensor(out_data, requires_grad=_wants_grad(x))

    def backward(g):
        x.accumulate_grad(K.maxpool2x2_backward(np.ascontiguousarray(g), arg))

    return _record(out, backward)


def upsample2x_nearest(x) -> Tensor:
    """Replicate each pixel into a 2x2 block; backward sums the block."""
    x = as_tensor(x)
    out = Tensor(K.upsample2x_forward(np.ascontiguousarray(x.data)), requires_grad=_wants_grad(x))

    def backward(g):
        x.accumulate_grad(K.upsample2x_backward(np.ascontiguousarray(g)))

    return _record(out, backward)


def leaky_relu(x, slope: float = 0.1) -> Tensor:
    if not 0.0 <= slope <= 1.0:
        raise ValueError(f"slope must be in [0, 1], got {slope}")
    x = as_tensor(x)
    pos = x.data >= 0
    out = Tensor(np.where(pos, x.data, x.data * slope), requires_grad=_wants_grad(x))

    def backward(g):
        x.accumulate_grad(np.where(pos, g, g * slope).astype(x.dtype, copy=False))

    return _record(out, backward)


def relu(x) -> Tensor:
    return leaky_relu(x, 0.0)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    z = np.exp(-np.abs(x.data))
    s = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    out = Tensor(s.astype(x.dtype, copy=False), requires_grad=_wants_grad(x))

    def backward(g):
        x.accumulate_grad(g * out.data * (1.0 - out.data))

    return _record(out, backward)


def softmax(x, axis: int = -1) -> Tensor:
    """Row-stable softmax, composed from primitive ops."""
    x = as_tensor(x)
    shift = Tensor(x.data.max(axis=axis, keepdims=True))
    e = (x - shift).exp()
    return e / e.sum(axis=axis, keepdims=True)


def batch_norm2d(x, gamma, beta, running_mean: np.ndarray, running_var: np.ndarray,
                 training: bool, eps: float = 1e-5, momentum: float = 0.1) -> Tensor:
    """Per-channel batch norm over (N, H, W); running stats via EMA."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ValueError(f"gamma/beta must have shape ({c},)")
    gb = gamma.reshape(1, c, 1, 1)
    bb = beta.reshape(1, c, 1, 1)
    if training:
        mu = x.mean(axis=(0, 2, 3), keepdims=True)
        var = ((x - mu) ** 2).mean(axis=(0, 2, 3), keepdims=True)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.data.reshape(c)
        running_var *= 1.0 - momentum
        running_var += momentum * var.data.reshape(c)
        xhat = (x - mu) / (var + eps).sqrt()
    else:
        rm = Tensor(running_mean.reshape(1, c, 1, 1).astype(x.dtype))
        rv = Tensor(running_var.reshape(1, c, 1, 1).astype(x.dtype))
        xhat = (x - rm) / (rv + eps).sqrt()
    return gb * xhat + bb


def dropout(x, p: float, training: bool, seed: int = 0) -> Tensor:
    """Inverted dropout: zero with prob p, scale survivors by 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    keep = stream("dropout", seed).random(x.shape) >= p
    mask = Tensor((keep / (1.0 - p)).astype(x.dtype))
    return x * mask
