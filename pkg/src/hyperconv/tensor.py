"""Dense tensors with reverse-mode automatic differentiation.

A module-level tape records every differentiable operation in execution
order; ``backward`` walks it in exact reverse, accumulating gradients into
``Tensor.grad``.  Ops run in the dtype of their inputs (float32 by default,
float64 when constructed that way), so gradient-check tests can run the
whole graph in 64-bit.

Values are expected to stay finite after every forward op; enable
``finite_checks(True)`` (or HYPERCONV_CHECK_FINITE=1) to assert this after
each recorded op during debugging.
"""

import os
from contextlib import contextmanager

import numpy as np

_DEFAULT_DTYPE = np.float32
_GRAD_ENABLED = True
_FINITE_CHECKS = os.environ.get("HYPERCONV_CHECK_FINITE", "0") == "1"


def default_dtype():
    return _DEFAULT_DTYPE


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError("default dtype must be float32 or float64")
    _DEFAULT_DTYPE = dtype


@contextmanager
def precision(dtype):
    """Temporarily change the dtype used for newly created tensors."""
    old = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(old)


def finite_checks(enabled: bool) -> None:
    global _FINITE_CHECKS
    _FINITE_CHECKS = enabled


class Tape:
    """Ordered record of executed ops; backward replays it in reverse."""

    def __init__(self):
        self.nodes = []

    def record(self, out, backward_fn):
        self.nodes.append((out, backward_fn))

    def clear(self):
        self.nodes.clear()

    def __len__(self):
        return len(self.nodes)


_TAPE = Tape()


def active_tape() -> Tape:
    return _TAPE


def reset_tape() -> None:
    _TAPE.clear()


@contextmanager
def no_grad():
    """Disable recording; ops inside return constant tensors."""
    global _GRAD_ENABLED
    old = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = old


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_on_tape")

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(_DEFAULT_DTYPE)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._on_tape = False

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # -- autodiff ------------------------------------------------------------

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Reverse-traverse the tape from this scalar; see module docs."""
        if self.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {self.shape}")
        if not self._on_tape:
            raise RuntimeError("loss is not on the tape (graph detached or built under no_grad)")
        self.grad = np.ones_like(self.data)
        for out, backward_fn in reversed(_TAPE.nodes):
            if out.grad is not None:
                backward_fn(out.grad)
        _TAPE.clear()

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes)

    def exp(self):
        return texp(self)

    def log(self):
        return tlog(self)

    def sqrt(self):
        return tsqrt(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out: Tensor, backward_fn) -> Tensor:
    if _FINITE_CHECKS and not np.all(np.isfinite(out.data)):
        raise FloatingPointError("non-finite values produced by a forward op")
    if _GRAD_ENABLED and out.requires_grad:
        out._on_tape = True
        _TAPE.record(out, backward_fn)
    return out


def _wants_grad(*tensors) -> bool:
    return _GRAD_ENABLED and any(t.requires_grad for t in tensors)


def reduce_to(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient down to ``shape`` (adjoint of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# -- elementwise arithmetic --------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, requires_grad=_wants_grad(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(reduce_to(g, a.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(reduce_to(g, b.shape).astype(b.dtype, copy=False))

    return _record(out, backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data, requires_grad=_wants_grad(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(reduce_to(g, a.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(reduce_to(-g, b.shape).astype(b.dtype, copy=False))

    return _record(out, backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, requires_grad=_wants_grad(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(reduce_to(g * b.data, a.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(reduce_to(g * a.data, b.shape).astype(b.dtype, copy=False))

    return _record(out, backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data, requires_grad=_wants_grad(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(reduce_to(g / b.data, a.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(reduce_to(-g * a.data / (b.data * b.data), b.shape).astype(b.dtype, copy=False))

    return _record(out, backward)


def power(a, p) -> Tensor:
    a = as_tensor(a)
    if not isinstance(p, (int, float)):
        raise TypeError("power exponent must be a python scalar")
    out = Tensor(a.data**p, requires_grad=_wants_grad(a))

    def backward(g):
        a.accumulate_grad((g * p * a.data ** (p - 1)).astype(a.dtype, copy=False))

    return _record(out, backward)


def texp(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.exp(a.data), requires_grad=_wants_grad(a))

    def backward(g):
        a.accumulate_grad(g * out.data)

    return _record(out, backward)


def tlog(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data), requires_grad=_wants_grad(a))

    def backward(g):
        a.accumulate_grad(g / a.data)

    return _record(out, backward)


def tsqrt(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.sqrt(a.data), requires_grad=_wants_grad(a))

    def backward(g):
        a.accumulate_grad(g / (2.0 * out.data))

    return _record(out, backward)


# -- reductions / shape ------------------------------------------------------


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), requires_grad=_wants_grad(a))

    def backward(g):
        if axis is not None and not keepdims:
            ax = (axis,) if isinstance(axis, int) else axis
            g = np.expand_dims(g, tuple(ax))
        a.accumulate_grad(np.broadcast_to(g, a.shape).astype(a.dtype, copy=False))

    return _record(out, backward)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        n = a.size
    else:
        ax = (axis,) if isinstance(axis, int) else axis
        n = int(np.prod([a.shape[i] for i in ax]))
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape), requires_grad=_wants_grad(a))

    def backward(g):
        a.accumulate_grad(g.reshape(a.shape))

    return _record(out, backward)


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    out = Tensor(np.ascontiguousarray(a.data.transpose(axes)), requires_grad=_wants_grad(a))
    inv = tuple(np.argsort(axes))

    def backward(g):
        a.accumulate_grad(g.transpose(inv))

    return _record(out, backward)


def take(a, idx) -> Tensor:
    """Basic (slice/int/ellipsis) indexing with scatter-add backward."""
    a = as_tensor(a)
    out = Tensor(a.data[idx].copy(), requires_grad=_wants_grad(a))

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] += g
        a.accumulate_grad(full)

    return _record(out, backward)


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), requires_grad=_wants_grad(*tensors))
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t.accumulate_grad(g[tuple(sl)])

    return _record(out, backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(np.matmul(a.data, b.data), requires_grad=_wants_grad(a, b))

    def backward(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a.accumulate_grad(reduce_to(ga, a.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b.accumulate_grad(reduce_to(gb, b.shape).astype(b.dtype, copy=False))

    return _record(out, backward)


def backward(loss: Tensor, wrt=None):
    """Run reverse mode from ``loss``; return a gradient map for ``wrt``.

    Parameters never touched by the graph get a zero gradient in the map.
    """
    loss.backward()
    if wrt is None:
        return {}
    return {t: (t.grad if t.grad is not None else np.zeros_like(t.data)) for t in wrt}
