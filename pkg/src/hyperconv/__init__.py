"""Convolutions with kernels generated by a small coordinate network.

The package bundles a tape-based autodiff core, the coordinate-network
convolution layer, reference backbones, synthetic segmentation and
undersampled-reconstruction tasks, a training loop, and kernel-analysis
tooling, all behind one CLI (``hyperconv``).
"""

from .backend import backend_name
from .tensor import Tensor, no_grad, precision

__all__ = ["Tensor", "no_grad", "precision", "backend_name"]
__version__ = "0.1.0"
