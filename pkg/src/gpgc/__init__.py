"""Gaussian-process regression with the infinitely wide GCN kernel."""

from .base_kernels import BaseKernelSpec, gram
from .estimator import GPGCClassifier, GPGCKernel
from .exceptions import FactorizationError, FormatError, KernelError, ShapeError
from .graph import Graph, NormalizedAdjacency, normalize_adjacency, propagate, sandwich
from .kernel import KernelConfig, build_kernel, initial_kernel, relu_layer
from .regression import GpPosterior, LabeledSplit, classify, encode_labels, posterior

__version__ = "0.1.0"

__all__ = [
    "BaseKernelSpec",
    "FactorizationError",
    "FormatError",
    "GPGCClassifier",
    "GPGCKernel",
    "GpPosterior",
    "Graph",
    "KernelConfig",
    "KernelError",
    "LabeledSplit",
    "NormalizedAdjacency",
    "ShapeError",
    "build_kernel",
    "classify",
    "encode_labels",
    "gram",
    "initial_kernel",
    "normalize_adjacency",
    "posterior",
    "propagate",
    "relu_layer",
    "sandwich",
]
