"""Standard layers used by the backbone builders."""

import numpy as np

from . import ops
from .module import Module
from .rng import derive, stream
from .tensor import Tensor, default_dtype


class Conv2d(Module):
    is_conv = True

    def __init__(self, n_in, n_out, kernel_size, stride=1, dilation=1,
                 padding="same", bias=True, seed=0):
        super().__init__()
        k_h, k_w = (kernel_size, kernel_size) if isinstance(kernel_size, int) else kernel_size
        self.n_in, self.n_out = n_in, n_out
        self.k_h, self.k_w = k_h, k_w
        self.stride, self.dilation, self.padding = stride, dilation, padding
        dt = default_dtype()
        rng = stream("conv_init", seed)
        bound = 1.0 / np.sqrt(n_in * k_h * k_w)
        self.weight = Tensor(rng.uniform(-bound, bound, (n_out, n_in, k_h, k_w)).astype(dt), requires_grad=True)
        self.bias = Tensor(rng.uniform(-bound, bound, n_out).astype(dt), requires_grad=True) if bias else None

    def forward(self, x):
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride,
                          dilation=self.dilation, padding=self.padding)

    def param_count(self) -> int:
        return self.weight.size + (self.bias.size if self.bias is not None else 0)


class BatchNorm2d(Module):
    def __init__(self, channels, eps=1e-5, momentum=0.1):
        super().__init__()
        dt = default_dtype()
        self.channels = channels
        self.eps, self.momentum = eps, momentum
        self.gamma = Tensor(np.ones(channels, dtype=dt), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dt), requires_grad=True)
        self.register_buffer("running_mean", np.zeros(channels, dtype=dt))
        self.register_buffer("running_var", np.ones(channels, dtype=dt))

    def forward(self, x):
        return ops.batch_norm2d(x, self.gamma, self.beta, self.running_mean,
                                self.running_var, self.training,
                                eps=self.eps, momentum=self.momentum)


class Dropout(Module):
    _stochastic = True

    def __init__(self, p=0.5):
        super().__init__()
        self.p = p
        self._seed = 0
        self._calls = 0

    def set_seed(self, seed: int) -> None:
        self._seed = seed
        self._calls = 0

    def forward(self, x):
        if not self.training:
            return x
        self._calls += 1
        return ops.dropout(x, self.p, True, seed=derive(self._seed, self._calls))


class ReLU(Module):
    def forward(self, x):
        return ops.relu(x)


class LeakyReLU(Module):
    def __init__(self, slope=0.1):
        super().__init__()
        self.slope = slope

    def forward(self, x):
        return ops.leaky_relu(x, self.slope)


class Sigmoid(Module):
    def forward(self, x):
        return ops.sigmoid(x)


class MaxPool2x2(Module):
    def forward(self, x):
        return ops.max_pool2x2(x)


class Upsample2x(Module):
    def forward(self, x):
        return ops.upsample2x_nearest(x)


class Identity(Module):
    def forward(self, x):
        return x


class Sequential(Module):
    def __init__(self, *steps):
        super().__init__()
        self.steps = list(steps)

    def forward(self, x):
        for step in self.steps:
            x = step(x)
        return x


class NonLocalBlock(Module):
    """Residual self-attention over all spatial positions.

    Query/key/value are 1x1 convs with half the channels; the output
    projection starts at zero, so a fresh block is the identity.
    """

    def __init__(self, channels, seed=0):
        super().__init__()
        inner = max(1, channels // 2)
        self.channels, self.inner = channels, inner
        self.query = Conv2d(channels, inner, 1, seed=derive(seed, 0))
        self.key = Conv2d(channels, inner, 1, seed=derive(seed, 1))
        self.value = Conv2d(channels, inner, 1, seed=derive(seed, 2))
        self.out = Conv2d(inner, channels, 1, seed=derive(seed, 3))
        self.out.weight.data[...] = 0.0
        self.out.bias.data[...] = 0.0

    def forward(self, x):
        n, c, h, w = x.shape
        hw = h * w
        q = self.query(x).reshape(n, self.inner, hw)
        k = self.key(x).reshape(n, self.inner, hw)
        v = self.value(x).reshape(n, self.inner, hw)
        att = ops.softmax(q.transpose(0, 2, 1) @ k, axis=-1)  # [n, hw, hw]
        y = (att @ v.transpose(0, 2, 1)).transpose(0, 2, 1).reshape(n, self.inner, h, w)
        return self.out(y) + x
