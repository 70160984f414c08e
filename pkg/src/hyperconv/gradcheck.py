"""Analytic-vs-numeric gradient verification via central differences."""

import numpy as np

from .tensor import Tensor, no_grad, reset_tape


def numeric_gradient(fn, inputs, eps: float = 1e-3):
    """Central-difference gradients of a scalar fn wrt each input tensor."""
    grads = []
    with no_grad():
        for t in inputs:
            g = np.zeros_like(t.data)
            flat = t.data.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                plus = float(fn(*inputs).data)
                flat[i] = orig - eps
                minus = float(fn(*inputs).data)
                flat[i] = orig
                gflat[i] = (plus - minus) / (2.0 * eps)
            grads.append(g)
    return grads


def grad_check(fn, inputs, eps: float = 1e-3) -> float:
    """Max relative error between analytic and numeric gradients.

    Error per component is |a - n| / max(|a|, |n|, 1e-8); inputs must all
    be float64 leaves with requires_grad for a meaningful bound.
    """
    inputs = list(inputs)
    for t in inputs:
        if not isinstance(t, Tensor) or not t.requires_grad:
            raise ValueError("grad_check inputs must be Tensors with requires_grad=True")
        t.grad = None
    reset_tape()
    out = fn(*inputs)
    if out.size != 1:
        raise ValueError(f"grad_check requires a scalar function, got output shape {out.shape}")
    out.backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]
    for t in inputs:
        t.grad = None
    numeric = numeric_gradient(fn, inputs, eps=eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
