"""Convolution kernels generated from spatial coordinates.

Instead of learning each kernel weight directly, a small position-wise
network maps each kernel tap's (row, col) offset to that tap's weights for
all channel pairs.  The learnable parameter count then depends on the
channel counts and the generator's width, not on the kernel size.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import ops
from .module import Module
from .rng import stream
from .tensor import Tensor, default_dtype, no_grad

HYPER_INPUT_WIDTH = 2  # (i, j) kernel coordinates


@dataclass(frozen=True)
class CoordinateGrid:
    """Normalized (i, j) offsets for every kernel tap; center is (0, 0)."""

    k_h: int
    k_w: int
    coords: np.ndarray  # [2, k_h, k_w]

    def rotated180(self) -> "CoordinateGrid":
        return CoordinateGrid(self.k_h, self.k_w, self.coords[:, ::-1, ::-1].copy())


def make_coordinate_grid(k_h: int, k_w: int) -> CoordinateGrid:
    """Grid entry (r, c) holds the tap's offsets scaled to [-1, 1]."""
    if k_h < 1 or k_w < 1 or k_h % 2 == 0 or k_w % 2 == 0:
        raise ValueError(f"kernel dims must be odd and positive, got {k_h}x{k_w}")
    si = 2.0 / (k_h - 1) if k_h > 1 else 0.0
    sj = 2.0 / (k_w - 1) if k_w > 1 else 0.0
    ii = (np.arange(k_h) - (k_h - 1) / 2.0) * si
    jj = (np.arange(k_w) - (k_w - 1) / 2.0) * sj
    coords = np.stack(np.meshgrid(ii, jj, indexing="ij"), axis=0)
    return CoordinateGrid(k_h, k_w, coords)


@dataclass(frozen=True)
class HyperNetConfig:
    """Width layout of the kernel generator: four hidden layers, leaky ReLU."""

    hidden_widths: tuple = (4, 4, 4, 4)
    slope: float = 0.1

    def __post_init__(self):
        if len(self.hidden_widths) != 4:
            raise ValueError("the kernel generator uses exactly four hidden layers")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must be positive")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))

    @property
    def n_last(self) -> int:
        return self.hidden_widths[-1]

    def layer_dims(self):
        """(fan_in, fan_out) for each hidden affine stage."""
        widths = (HYPER_INPUT_WIDTH,) + self.hidden_widths
        return list(zip(widths[:-1], widths[1:]))


class ParamCount(NamedTuple):
    exact: int
    dominant: int  # final-hidden-layer term that dominates in practice


def count_params_standard(h: int, w: int, n_in: int, n_out: int, with_bias: bool) -> int:
    """Weights of a standard h x w convolution (optionally + bias)."""
    if min(h, w, n_in, n_out) < 1:
        raise ValueError("all dimensions must be positive")
    return h * w * n_in * n_out + (n_out if with_bias else 0)


def count_params_hyper(cfg: HyperNetConfig, n_in: int, n_out: int, with_bias: bool) -> ParamCount:
    """Learnable scalars of a generated-kernel layer; independent of kernel size."""
    hidden = sum((fi + 1) * fo for fi, fo in cfg.layer_dims())
    dominant = (cfg.n_last + 1) * n_in * n_out
    exact = dominant + hidden + (n_out if with_bias else 0)
    return ParamCount(exact, dominant)


class HyperConv2d(Module):
    """Drop-in convolution whose kernel is produced by the coordinate net.

    The kernel is rematerialized from the generator parameters on every
    training forward pass and cached while in eval mode.  The per-channel
    output bias is a directly learned parameter, as in a standard conv.
    """

    def __init__(self, n_in, n_out, kernel_size, cfg: HyperNetConfig = HyperNetConfig(),
                 stride=1, dilation=1, padding="same", bias=True, seed=0):
        super().__init__()
        k_h, k_w = (kernel_size, kernel_size) if isinstance(kernel_size, int) else kernel_size
        self.n_in, self.n_out = n_in, n_out
        self.k_h, self.k_w = k_h, k_w
        self.cfg = cfg
        self.stride, self.dilation, self.padding = stride, dilation, padding
        self.grid = make_coordinate_grid(k_h, k_w)
        dt = default_dtype()
        rng = stream("hyperconv_init", seed)
        self.hidden_weights = []
        self.hidden_biases = []
        for fan_in, fan_out in cfg.layer_dims():
            bound = 1.0 / np.sqrt(fan_in)
            self.hidden_weights.append(Tensor(rng.uniform(-bound, bound, (fan_out, fan_in)).astype(dt), requires_grad=True))
            self.hidden_biases.append(Tensor(rng.uniform(-bound, bound, fan_out).astype(dt), requires_grad=True))
        # final affine emits one weight per (out, in) channel pair per tap;
        # the 1/sqrt(kh*kw) factor keeps materialized-kernel variance near a
        # standard conv's fan-in init
        bound = 1.0 / (np.sqrt(cfg.n_last) * np.sqrt(k_h * k_w))
        self.final_weight = Tensor(rng.uniform(-bound, bound, (n_in * n_out, cfg.n_last)).astype(dt), requires_grad=True)
        self.final_bias = Tensor(np.zeros(n_in * n_out, dtype=dt), requires_grad=True)
        self.bias = Tensor(np.zeros(n_out, dtype=dt), requires_grad=True) if bias else None
        self._kernel_cache = None

    def theta(self):
        """All generator parameters, in forward order."""
        out = []
        for w, b in zip(self.hidden_weights, self.hidden_biases):
            out += [w, b]
        return out + [self.final_weight, self.final_bias]

    def materialize(self, grid: CoordinateGrid = None) -> Tensor:
        return hypernet_forward(self, grid if grid is not None else self.grid)

    def _on_mode_change(self):
        self._kernel_cache = None

    def forward(self, x):
        if self.training:
            kernel = self.materialize()
        else:
            if self._kernel_cache is None:
                with no_grad():
                    self._kernel_cache = self.materialize().detach()
            kernel = self._kernel_cache
        return ops.conv2d(x, kernel, self.bias, stride=self.stride,
                          dilation=self.dilation, padding=self.padding)

    def param_count(self) -> int:
        return count_params_hyper(self.cfg, self.n_in, self.n_out, self.bias is not None).exact


def hypernet_forward(layer: HyperConv2d, grid: CoordinateGrid) -> Tensor:
    """Evaluate the coordinate net on a grid; returns [n_out, n_in, k_h, k_w]."""
    if (grid.k_h, grid.k_w) != (layer.k_h, layer.k_w):
        raise ValueError(f"grid {grid.k_h}x{grid.k_w} does not match layer {layer.k_h}x{layer.k_w}")
    p = grid.k_h * grid.k_w
    h = Tensor(grid.coords.reshape(2, p).T.astype(layer.final_weight.dtype))
    for w, b in zip(layer.hidden_weights, layer.hidden_biases):
        h = ops.leaky_relu(h @ w.transpose(1, 0) + b, layer.cfg.slope)
    flat = h @ layer.final_weight.transpose(1, 0) + layer.final_bias  # [P, n_in*n_out]
    return flat.reshape(grid.k_h, grid.k_w, layer.n_out, layer.n_in).transpose(2, 3, 0, 1)


def hyperconv_forward(layer: HyperConv2d, x, stride=1, dilation=1, padding="same") -> Tensor:
    """Materialize the kernel from the current generator, then convolve."""
    kernel = hypernet_forward(layer, layer.grid)
    return ops.conv2d(x, kernel, layer.bias, stride=stride, dilation=dilation, padding=padding)


def materialize_all(model: Module):
    """Frozen snapshot of every convolution kernel, in forward order."""
    out = []
    with no_grad():
        for name, mod in model.named_modules():
            if isinstance(mod, HyperConv2d):
                out.append((name, mod.materialize().data.copy()))
            elif hasattr(mod, "weight") and getattr(mod, "is_conv", False):
                out.append((name, mod.weight.data.copy()))
    return out
