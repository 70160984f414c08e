"""Backbone architectures with interchangeable standard/generated kernels.

All builders take an ArchitectureSpec; ``conv_mode="hyper"`` swaps every
convolution except the final 1x1 output head for a coordinate-generated
one of the same size.  The UNet decoder upsamples with nearest neighbor
followed by a fixed 3x3 channel-halving conv (part of the upsampling
block, so it stays 3x3 whatever the main kernel size), then concatenates
the skip and applies two full-size convs.
"""

from dataclasses import dataclass, asdict, field

from .hyper import HyperConv2d, HyperNetConfig
from .layers import (BatchNorm2d, Conv2d, Dropout, Identity, MaxPool2x2,
                     NonLocalBlock, ReLU, Sequential, Sigmoid, Upsample2x)
from .module import Module
from .rng import derive
from .tensor import concat

ARCH_NAMES = ("unet", "flat_cnn", "flat_dilated_cnn")

FLAT_KERNELS = (3, 5, 9, 5, 3)
FLAT_CHANNELS = (9, 25, 81, 25, 9)
FLAT_DILATIONS = (1, 2, 4, 8, 4, 2, 1)
FLAT_DILATED_CHANNELS = (16, 32, 64, 128, 64, 32, 16)

# N_L=8 gives each generated kernel exactly as many weights as a standard
# 3x3 conv, which is how the flat hyper variant matches the dilated
# baseline's budget
FLAT_HYPER_HIDDEN = (4, 4, 4, 8)


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    conv_mode: str = "standard"
    kernel_size: int = 3
    dilation: int = 1
    init_channels: int = 32
    in_channels: int = 1
    out_channels: int = 1
    hyper_hidden: tuple = (4, 4, 4, 4)
    nonlocal_bottleneck: bool = False
    head: str = "sigmoid"

    def __post_init__(self):
        if self.name not in ARCH_NAMES:
            raise ValueError(f"unknown architecture {self.name!r}")
        if self.conv_mode not in ("standard", "hyper"):
            raise ValueError(f"conv_mode must be standard|hyper, got {self.conv_mode!r}")
        if self.head not in ("sigmoid", "linear"):
            raise ValueError(f"head must be sigmoid|linear, got {self.head!r}")
        if self.kernel_size % 2 == 0 or self.kernel_size < 1:
            raise ValueError("kernel_size must be odd and positive")
        if self.init_channels < 1 or self.dilation < 1:
            raise ValueError("init_channels and dilation must be >= 1")
        object.__setattr__(self, "hyper_hidden", tuple(int(w) for w in self.hyper_hidden))

    @property
    def hyper_cfg(self) -> HyperNetConfig:
        return HyperNetConfig(self.hyper_hidden)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hyper_hidden"] = list(d["hyper_hidden"])
        return d

    @staticmethod
    def from_dict(d: dict) -> "ArchitectureSpec":
        known = set(ArchitectureSpec.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown architecture keys: {sorted(unknown)}")
        d = dict(d)
        if "hyper_hidden" in d:
            d["hyper_hidden"] = tuple(d["hyper_hidden"])
        return ArchitectureSpec(**d)


def _conv(spec, n_in, n_out, k, dilation, seed):
    if spec.conv_mode == "hyper":
        return HyperConv2d(n_in, n_out, k, cfg=spec.hyper_cfg, dilation=dilation, seed=seed)
    return Conv2d(n_in, n_out, k, dilation=dilation, seed=seed)


def _block(spec, n_in, n_out, k, dilation, seed):
    return Sequential(_conv(spec, n_in, n_out, k, dilation, seed), BatchNorm2d(n_out), ReLU())


class UNet(Module):
    def __init__(self, spec: ArchitectureSpec, seed=0):
        super().__init__()
        self.spec = spec
        k, d = spec.kernel_size, spec.dilation
        c = [spec.init_channels * 2**i for i in range(4)]
        s = iter(range(64))

        def nxt():
            return derive(seed, "init", next(s))

        self.enc = [
            _block(spec, spec.in_channels, c[0], k, d, nxt()), _block(spec, c[0], c[0], k, d, nxt()),
            _block(spec, c[0], c[1], k, d, nxt()), _block(spec, c[1], c[1], k, d, nxt()),
            _block(spec, c[1], c[2], k, d, nxt()), _block(spec, c[2], c[2], k, d, nxt()),
        ]
        self.pool = MaxPool2x2()
        self.bot = [_block(spec, c[2], c[3], k, d, nxt()), _block(spec, c[3], c[3], k, d, nxt())]
        self.attn = NonLocalBlock(c[3], seed=nxt()) if spec.nonlocal_bottleneck else None
        self.drop = Dropout(0.5)
        self.up = Upsample2x()
        self.upconv = [_block(spec, c[3], c[2], 3, 1, nxt()),
                       _block(spec, c[2], c[1], 3, 1, nxt()),
                       _block(spec, c[1], c[0], 3, 1, nxt())]
        self.dec = [
            _block(spec, 2 * c[2], c[2], k, d, nxt()), _block(spec, c[2], c[2], k, d, nxt()),
            _block(spec, 2 * c[1], c[1], k, d, nxt()), _block(spec, c[1], c[1], k, d, nxt()),
            _block(spec, 2 * c[0], c[0], k, d, nxt()), _block(spec, c[0], c[0], k, d, nxt()),
        ]
        self.out_conv = Conv2d(c[0], spec.out_channels, 1, seed=nxt())
        self.out_act = Sigmoid() if spec.head == "sigmoid" else Identity()

    def forward(self, x):
        s0 = self.enc[1](self.enc[0](x))
        s1 = self.enc[3](self.enc[2](self.pool(s0)))
        s2 = self.enc[5](self.enc[4](self.pool(s1)))
        x = self.bot[1](self.bot[0](self.pool(s2)))
        if self.attn is not None:
            x = self.attn(x)
        x = self.drop(x)
        x = concat([self.upconv[0](self.up(x)), s2], axis=1)
        x = self.dec[1](self.dec[0](x))
        x = concat([self.upconv[1](self.up(x)), s1], axis=1)
        x = self.dec[3](self.dec[2](x))
        x = concat([self.upconv[2](self.up(x)), s0], axis=1)
        x = self.dec[5](self.dec[4](x))
        return self.out_act(self.out_conv(x))


class FlatCNN(Module):
    def __init__(self, spec: ArchitectureSpec, seed=0):
        super().__init__()
        self.spec = spec
        chain = (spec.in_channels,) + FLAT_CHANNELS
        self.blocks = [
            _block(spec, chain[i], chain[i + 1], FLAT_KERNELS[i], spec.dilation, derive(seed, "init", i))
            for i in range(len(FLAT_KERNELS))
        ]
        self.out_conv = Conv2d(chain[-1], spec.out_channels, 1, seed=derive(seed, "init", 99))
        self.out_act = Sigmoid() if spec.head == "sigmoid" else Identity()

    def forward(self, x):
        for block in self.blocks:
            x = block(x)
        return self.out_act(self.out_conv(x))


class ResidualBlock(Module):
    def __init__(self, spec, n_in, n_out, dilation, seed):
        super().__init__()
        self.conv1 = _block(spec, n_in, n_out, 3, dilation, derive(seed, 0))
        self.conv2 = _conv(spec, n_out, n_out, 3, dilation, derive(seed, 1))
        self.bn2 = BatchNorm2d(n_out)
        self.proj = Conv2d(n_in, n_out, 1, seed=derive(seed, 2)) if n_in != n_out else Identity()
        self.act = ReLU()

    def forward(self, x):
        return self.act(self.bn2(self.conv2(self.conv1(x))) + self.proj(x))


class FlatDilatedCNN(Module):
    def __init__(self, spec: ArchitectureSpec, seed=0):
        super().__init__()
        self.spec = spec
        chain = (spec.in_channels,) + FLAT_DILATED_CHANNELS
        self.blocks = [
            ResidualBlock(spec, chain[i], chain[i + 1], FLAT_DILATIONS[i], derive(seed, "init", i))
            for i in range(len(FLAT_DILATIONS))
        ]
        self.out_conv = Conv2d(chain[-1], spec.out_channels, 1, seed=derive(seed, "init", 99))
        self.out_act = Sigmoid() if spec.head == "sigmoid" else Identity()

    def forward(self, x):
        for block in self.blocks:
            x = block(x)
        return self.out_act(self.out_conv(x))


# -- builders -----------------------------------------------------------------


def build_model(spec: ArchitectureSpec, seed: int = 0) -> Module:
    cls = {"unet": UNet, "flat_cnn": FlatCNN, "flat_dilated_cnn": FlatDilatedCNN}[spec.name]
    return cls(spec, seed=seed)


def build_unet(init_channels=32, kernel_size=3, dilation=1, conv_mode="standard",
               hyper_cfg: HyperNetConfig = None, nonlocal_bottleneck=False,
               in_channels=1, out_channels=1, head="sigmoid", seed=0) -> UNet:
    hidden = hyper_cfg.hidden_widths if hyper_cfg is not None else (4, 4, 4, 4)
    spec = ArchitectureSpec("unet", conv_mode=conv_mode, kernel_size=kernel_size,
                            dilation=dilation, init_channels=init_channels,
                            in_channels=in_channels, out_channels=out_channels,
                            hyper_hidden=hidden, nonlocal_bottleneck=nonlocal_bottleneck,
                            head=head)
    return UNet(spec, seed=seed)


def build_flat_cnn(conv_mode="standard", hyper_cfg: HyperNetConfig = None,
                   in_channels=1, out_channels=1, head="sigmoid", seed=0) -> FlatCNN:
    hidden = hyper_cfg.hidden_widths if hyper_cfg is not None else (4, 4, 4, 4)
    spec = ArchitectureSpec("flat_cnn", conv_mode=conv_mode, hyper_hidden=hidden,
                            in_channels=in_channels, out_channels=out_channels, head=head)
    return FlatCNN(spec, seed=seed)


def build_flat_dilated_cnn(conv_mode="standard", hyper_cfg: HyperNetConfig = None,
                           in_channels=1, out_channels=1, head="sigmoid", seed=0) -> FlatDilatedCNN:
    if hyper_cfg is not None:
        hidden = hyper_cfg.hidden_widths
    else:
        hidden = FLAT_HYPER_HIDDEN if conv_mode == "hyper" else (4, 4, 4, 4)
    spec = ArchitectureSpec("flat_dilated_cnn", conv_mode=conv_mode, hyper_hidden=hidden,
                            in_channels=in_channels, out_channels=out_channels, head=head)
    return FlatDilatedCNN(spec, seed=seed)


# -- accounting ----------------------------------------------------------------

ALL_PIXELS = "ALL"


def _encoder_path(spec: ArchitectureSpec):
    k, d = spec.kernel_size, spec.dilation
    if spec.name == "unet":
        path = []
        for _ in range(3):
            path += [("conv", k, d), ("conv", k, d), ("pool", 2, 2)]
        path += [("conv", k, d), ("conv", k, d)]
        if spec.nonlocal_bottleneck:
            path.append(("nonlocal",))
        return path
    if spec.name == "flat_cnn":
        return [("conv", kk, spec.dilation) for kk in FLAT_KERNELS]
    if spec.name == "flat_dilated_cnn":
        return [("conv", 3, dd) for dd in FLAT_DILATIONS for _ in range(2)]
    raise ValueError(f"unsupported architecture {spec.name!r}")


def receptive_field(spec: ArchitectureSpec):
    """Receptive field (pixels) at the deepest conv; ALL for attention."""
    r, j = 1, 1
    for op in _encoder_path(spec):
        if op[0] == "conv":
            _, k, d = op
            r += (k - 1) * d * j
        elif op[0] == "pool":
            _, kp, stride = op
            r += (kp - 1) * j
            j *= stride
        elif op[0] == "nonlocal":
            return ALL_PIXELS
        else:
            raise ValueError(f"unsupported layer kind {op[0]!r}")
    return r


@dataclass
class ModelSummary:
    name: str
    conv_mode: str
    rows: list = field(default_factory=list)  # (layer name, learnable scalars)
    total: int = 0
    receptive_field: object = None

    def to_dict(self) -> dict:
        return {"name": self.name, "conv_mode": self.conv_mode,
                "receptive_field": self.receptive_field, "total": self.total,
                "total_millions": round(self.total / 1e6, 4),
                "layers": [{"layer": n, "params": c} for n, c in self.rows]}


def _direct_count(mod: Module) -> int:
    total = 0
    for value in vars(mod).values():
        if hasattr(value, "requires_grad") and getattr(value, "requires_grad", False):
            total += value.size
        elif isinstance(value, (list, tuple)):
            total += sum(v.size for v in value if hasattr(v, "requires_grad") and v.requires_grad)
    return total


def param_count(model: Module) -> ModelSummary:
    """Enumerate actual learnable scalars, grouped by owning layer."""
    spec = model.spec
    summary = ModelSummary(spec.name, spec.conv_mode, receptive_field=receptive_field(spec))
    for name, mod in model.named_modules():
        n = _direct_count(mod)
        if n:
            summary.rows.append((name, n))
            summary.total += n
    return summary
