"""Covariance of infinitely wide ReLU graph convolutional networks.

A two-layer GCN ``Z = A_hat relu(A_hat X W1) W2`` with i.i.d. Gaussian weights
converges to a Gaussian process as the hidden width grows. Its covariance is
built in three moves:

1. ``Theta0 = sigma_b^2 + delta_w * K(A_hat X, A_hat X)`` for a base kernel K;
2. the ReLU expectation (order-1 arc-cosine kernel) maps a covariance to the
   covariance of the activated layer, scaled by ``delta_w``;
3. propagation through ``A_hat`` sandwiches the covariance, ``A_hat C A_hat``.

``"small"`` skips the final propagation, ``"big"`` applies it, and ``"deep"``
repeats steps 2-3 for ``n_layers`` weight layers in total. ``delta_w`` enters
exactly once per weight layer.
"""

from dataclasses import dataclass, field, replace
import hashlib
import json

import numpy as np

from .base_kernels import BaseKernelSpec, gram
from .graph import propagate, sandwich

__all__ = [
    "VARIANTS",
    "KernelConfig",
    "angle_matrix",
    "initial_kernel",
    "relu_layer",
    "build_kernel",
    "build_unit_kernel",
    "n_weight_layers",
]

VARIANTS = ("small", "big", "deep")


@dataclass(frozen=True)
class KernelConfig:
    """Hyperparameters of the GCN Gaussian-process kernel.

    ``pi_scaling`` switches the ReLU coefficient from the exact
    ``1/(2*pi)`` to ``1/pi``. The two differ by a factor of two per ReLU layer
    only when ``bias_variance == 0``; since later layers see rescaled
    diagonals, the flag must be used consistently for a whole kernel.

    ``jitter=None`` means the regression picks ``1e-8 * trace / D``.
    """

    variant: str = "big"
    delta_w: float = 1.0
    base: BaseKernelSpec = field(default_factory=BaseKernelSpec)
    n_layers: int = 2
    bias_variance: float = 0.0
    pi_scaling: bool = False
    sigma_tau_sq: float = 0.01
    jitter: float | None = None

    def __post_init__(self):
        variant = str(self.variant).lower()
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        if isinstance(self.base, (dict, str)):
            object.__setattr__(self, "base", BaseKernelSpec.from_dict(self.base))
        if variant != "deep":
            object.__setattr__(self, "n_layers", 2)
        elif int(self.n_layers) < 1:
            raise ValueError(f"n_layers must be >= 1, got {self.n_layers}")
        object.__setattr__(self, "n_layers", int(self.n_layers))
        if not self.delta_w > 0:
            raise ValueError(f"delta_w must be positive, got {self.delta_w}")
        if self.bias_variance < 0:
            raise ValueError(f"bias_variance must be >= 0, got {self.bias_variance}")
        if self.sigma_tau_sq < 0:
            raise ValueError(f"sigma_tau_sq must be >= 0, got {self.sigma_tau_sq}")
        if self.jitter is not None and self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")

    def to_dict(self):
        d = {
            "variant": self.variant,
            "delta_w": float(self.delta_w),
            "base": self.base.to_dict(),
            "bias_variance": float(self.bias_variance),
            "pi_scaling": bool(self.pi_scaling),
            "sigma_tau_sq": float(self.sigma_tau_sq),
            "jitter": None if self.jitter is None else float(self.jitter),
        }
        if self.variant == "deep":
            d["n_layers"] = self.n_layers
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "base" in d:
            d["base"] = BaseKernelSpec.from_dict(d["base"])
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown kernel config fields: {sorted(unknown)}")
        return cls(**d)

    def kernel_fields(self):
        """The subset of fields that determine the prior covariance."""
        d = self.to_dict()
        d.pop("sigma_tau_sq")
        d.pop("jitter")
        return d

    def digest(self):
        blob = json.dumps(self.kernel_fields(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **changes):
        return replace(self, **changes)


def _relu_coefficient(cfg):
    return cfg.delta_w / np.pi if cfg.pi_scaling else cfg.delta_w / (2.0 * np.pi)


def _diag_checked(theta):
    d = np.diagonal(theta).copy()
    if (d < 0).any():
        i = int(np.flatnonzero(d < 0)[0])
        raise ValueError(f"invalid covariance: negative variance {d[i]:.3g} at node {i}")
    return d


def angle_matrix(theta):
    """Angles ``arccos(theta_mn / sqrt(theta_mm theta_nn))``.

    Rows with zero variance get ``pi/2``; the diagonal of positive-variance
    rows is exactly 0.
    """
    theta = np.asarray(theta, dtype=np.float64)
    d = _diag_checked(theta)
    s = np.sqrt(d)
    norm = np.outer(s, s)
    live = norm > 0
    cos = np.zeros_like(theta)
    np.divide(theta, norm, out=cos, where=live)
    np.clip(cos, -1.0, 1.0, out=cos)
    alpha = np.arccos(cos)
    alpha[~live] = np.pi / 2
    alpha[np.diag_indices_from(alpha)] = np.where(d > 0, 0.0, np.pi / 2)
    return alpha


def relu_layer(cfg, theta):
    """Covariance after a ReLU layer followed by a ``delta_w``-scaled
    linear layer (order-1 arc-cosine kernel)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError(f"covariance must be square, got shape {theta.shape}")
    d = _diag_checked(theta)
    s = np.sqrt(d)
    norm = np.outer(s, s)
    alpha = angle_matrix(theta)
    j = np.sin(alpha) + (np.pi - alpha) * np.cos(alpha)
    out = cfg.bias_variance + _relu_coefficient(cfg) * norm * j
    # exact diagonal: alpha = 0 gives j = pi
    out[np.diag_indices_from(out)] = cfg.bias_variance + _relu_coefficient(cfg) * d * np.pi
    out = 0.5 * (out + out.T)
    return out


def initial_kernel(cfg, a_hat, x):
    """``sigma_b^2 + delta_w * K_base(A_hat X)``."""
    xh = propagate(a_hat, x)
    if xh.ndim == 1:
        xh = xh[:, None]
    return cfg.bias_variance + cfg.delta_w * gram(cfg.base, xh)


def _recursion(cfg, a_hat, theta0):
    if cfg.variant == "small":
        return relu_layer(cfg, theta0)
    if cfg.variant == "big":
        return sandwich(a_hat, relu_layer(cfg, theta0))
    gamma = theta0
    for _ in range(cfg.n_layers - 1):
        gamma = sandwich(a_hat, relu_layer(cfg, gamma))
    return gamma


def build_kernel(cfg, a_hat, x):
    """Prior covariance of the GCN outputs over all nodes."""
    return _recursion(cfg, a_hat, initial_kernel(cfg, a_hat, x))


def n_weight_layers(cfg):
    return 2 if cfg.variant in ("small", "big") else cfg.n_layers


def build_unit_kernel(cfg, a_hat, x):
    """Kernel at ``delta_w = 1``.

    With ``bias_variance == 0`` every layer is 1-homogeneous, so
    ``build_kernel(cfg) == cfg.delta_w ** n_weight_layers(cfg) * unit``.
    Raises ``ValueError`` when a bias makes that scaling invalid.
    """
    if cfg.bias_variance != 0:
        raise ValueError("delta_w scaling requires bias_variance == 0")
    return build_kernel(replace(cfg, delta_w=1.0), a_hat, x)
