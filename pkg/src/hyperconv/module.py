"""Tiny module system: parameter registry, train/eval mode, state dicts."""

import numpy as np

from .rng import derive
from .tensor import Tensor


class Module:
    def __init__(self):
        self.training = True
        self._buffers = {}

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value
        setattr(self, name, value)

    # -- traversal -----------------------------------------------------------

    def named_modules(self, prefix: str = ""):
        yield prefix, self
        for key, value in vars(self).items():
            if key.startswith("_"):
                continue
            if isinstance(value, Module):
                yield from value.named_modules(f"{prefix}.{key}" if prefix else key)
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        name = f"{prefix}.{key}.{i}" if prefix else f"{key}.{i}"
                        yield from item.named_modules(name)

    def named_parameters(self):
        for mname, mod in self.named_modules():
            for key, value in vars(mod).items():
                name = f"{mname}.{key}" if mname else key
                if isinstance(value, Tensor) and value.requires_grad:
                    yield name, value
                elif isinstance(value, (list, tuple)):
                    for i, item in enumerate(value):
                        if isinstance(item, Tensor) and item.requires_grad:
                            yield f"{name}.{i}", item

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self):
        for mname, mod in self.named_modules():
            for key in mod._buffers:
                yield (f"{mname}.{key}" if mname else key), mod._buffers[key]

    # -- modes and seeds -------------------------------------------------------

    def train(self):
        for _, mod in self.named_modules():
            mod.training = True
            mod._on_mode_change()
        return self

    def eval(self):
        for _, mod in self.named_modules():
            mod.training = False
            mod._on_mode_change()
        return self

    def _on_mode_change(self):
        pass

    def reseed(self, *key) -> None:
        """Assign fresh per-layer seeds to stochastic submodules."""
        for i, (_, mod) in enumerate(self.named_modules()):
            if getattr(mod, "_stochastic", False):
                mod.set_seed(derive(*key, i))

    # -- state ---------------------------------------------------------------

    def state_dict(self) -> dict:
        state = {f"param:{k}": v.data.copy() for k, v in self.named_parameters()}
        state.update({f"buffer:{k}": v.copy() for k, v in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict) -> None:
        for k, p in self.named_parameters():
            src = state[f"param:{k}"]
            if src.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {k}: {src.shape} vs {p.data.shape}")
            p.data = src.astype(p.data.dtype, copy=True)
        for k, b in self.named_buffers():
            b[...] = state[f"buffer:{k}"]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None
