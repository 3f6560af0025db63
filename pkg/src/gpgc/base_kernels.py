"""Initial (base) kernels evaluated on propagated node features."""

from dataclasses import dataclass

import numpy as np

from .exceptions import KernelError

__all__ = ["BaseKernelSpec", "KINDS", "cosine_similarity", "gram"]

KINDS = ("se", "inner_product", "arccosine", "polynomial")

_ALIASES = {
    "se": "se",
    "squared_exponential": "se",
    "squaredexponential": "se",
    "rbf": "se",
    "ip": "inner_product",
    "inner_product": "inner_product",
    "innerproduct": "inner_product",
    "linear": "inner_product",
    "ac": "arccosine",
    "arccosine": "arccosine",
    "arc_cosine": "arccosine",
    "pl": "polynomial",
    "polynomial": "polynomial",
}


@dataclass(frozen=True)
class BaseKernelSpec:
    """One of the four base kernels and its parameters.

    ``length_scale`` is used only by ``"se"``; ``bias`` and ``degree`` only
    by ``"polynomial"``.
    """

    kind: str = "inner_product"
    length_scale: float = 1.0
    bias: float = 0.5
    degree: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown base kernel {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "se" and not self.length_scale > 0:
            raise ValueError(f"length_scale must be positive, got {self.length_scale}")
        if kind == "polynomial":
            if not self.bias >= 0:
                raise ValueError(f"bias must be nonnegative, got {self.bias}")
            if not self.degree > 0:
                raise ValueError(f"degree must be positive, got {self.degree}")

    def to_dict(self):
        if self.kind == "se":
            return {"kind": "se", "length_scale": float(self.length_scale)}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "bias": float(self.bias), "degree": float(self.degree)}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, cls):
            return d
        if isinstance(d, str):
            return cls(d)
        d = dict(d)
        unknown = set(d) - {"kind", "length_scale", "bias", "degree"}
        if unknown:
            raise ValueError(f"unknown base kernel fields: {sorted(unknown)}")
        return cls(**d)

    def label(self):
        if self.kind == "se":
            return f"se(l={self.length_scale:g})"
        if self.kind == "polynomial":
            return f"polynomial(b={self.bias:g},a={self.degree:g})"
        return self.kind


def _row_norms(x, kind):
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise KernelError(
            f"{kind} kernel undefined for zero feature vector at node {zero[0]}",
            node=int(zero[0]),
        )
    return norms


def cosine_similarity(x, kind="cosine"):
    """Unclamped pairwise cosine similarity with the diagonal set to 1."""
    x = np.asarray(x, dtype=np.float64)
    u = x / _row_norms(x, kind)[:, None]
    c = u @ u.T
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 1.0)
    return c


def gram(spec, x):
    """Pairwise gram matrix of ``spec`` over the rows of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"features must be a nonempty 2-D array, got shape {x.shape}")

    if spec.kind == "inner_product":
        k = x @ x.T
        k = 0.5 * (k + k.T)
    elif spec.kind == "se":
        sq = np.einsum("ij,ij->i", x, x)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        np.maximum(d2, 0.0, out=d2)
        d2 = 0.5 * (d2 + d2.T)
        np.fill_diagonal(d2, 0.0)
        k = np.exp(-d2 / (2.0 * spec.length_scale**2))
    elif spec.kind == "arccosine":
        c = np.clip(cosine_similarity(x, "arccosine"), -1.0, 1.0)
        k = 1.0 - np.arccos(c) / np.pi
    else:
        c = np.clip(cosine_similarity(x, "polynomial"), -1.0, 1.0)
        with np.errstate(invalid="ignore"):
            k = np.power(c + spec.bias, spec.degree)

    if not np.isfinite(k).all():
        r = int(np.argwhere(~np.isfinite(k))[0, 0])
        raise KernelError(f"{spec.label()} kernel produced a non-finite value at node {r}", node=r)
    return k
