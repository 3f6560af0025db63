"""Finite-width Monte-Carlo check of the analytic GCN kernel.

Random, untrained GCNs are sampled and the second moment of their outputs is
compared with :func:`gpgc.kernel.build_kernel`. Correspondence is exact only
for the inner-product base kernel: ``A_hat X W1`` has covariance
``delta_w * (A_hat X)(A_hat X)^T``.

Weight variances follow the fan-in convention behind ``delta_w``: the first
layer acts on raw propagated features, whose kernel already carries the full
``delta_w``, so its entries have variance ``delta_w``. Every later layer reads
``width`` hidden units and gets variance ``delta_w / width``.

Every weight block of draw ``s`` comes from a PCG64 generator seeded by
``SeedSequence(seed, spawn_key=(s, layer, block))``, so draws can be computed
in any order and any subset reproduces bit for bit.
"""

from dataclasses import dataclass
import time

import numpy as np

from .exceptions import ShapeError
from .graph import Graph, normalize_adjacency, propagate
from .kernel import KernelConfig, build_kernel, VARIANTS

__all__ = [
    "McConfig",
    "draw_generator",
    "sample_gcn_outputs",
    "readout_second_moments",
    "estimate_covariance",
    "empirical_covariance",
    "kernel_discrepancy",
    "width_sweep",
    "random_instance",
]


READOUTS = ("marginal", "sample")
UNIT_BLOCK = 64


@dataclass(frozen=True)
class McConfig:
    """Sampler settings.

    ``readout="sample"`` draws one output unit per network, so the estimate
    carries readout noise of order ``sqrt(2 / samples)`` whatever the width.
    ``"marginal"`` integrates the Gaussian readout layer exactly and leaves
    only the hidden-layer sampling error, which shrinks with width.
    """

    width: int = 1024
    samples: int = 400
    seed: int = 0
    variant: str = "big"
    n_layers: int = 2
    delta_w: float = 1.0
    base: str = "inner_product"
    readout: str = "marginal"

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        variant = str(self.variant).lower()
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        if self.readout not in READOUTS:
            raise ValueError(f"readout must be one of {READOUTS}, got {self.readout!r}")
        if not self.delta_w > 0:
            raise ValueError(f"delta_w must be positive, got {self.delta_w}")

    def kernel_config(self, pi_scaling=False):
        """Analytic counterpart of this sampler."""
        return KernelConfig(
            variant=self.variant,
            n_layers=self.n_layers,
            delta_w=self.delta_w,
            base=self.base,
            pi_scaling=pi_scaling,
        )

    @property
    def layers(self):
        return 2 if self.variant in ("small", "big") else self.n_layers


def draw_generator(seed, draw, *key):
    """Generator for draw ``draw``; extra ``key`` ints select sub-streams."""
    seq = np.random.SeedSequence(seed, spawn_key=(draw, *key))
    return np.random.Generator(np.random.PCG64(seq))


def _weights(seed, draw, layer, fan_in, width):
    """``(fan_in, width)`` standard normals built from column blocks.

    Block ``b`` comes from its own stream and is filled row-major, so the
    weights of a narrower network are the leading sub-matrix of a wider
    one's. Networks of different widths thereby share hidden units (common
    random numbers) while each remains correctly distributed.
    """
    blocks = []
    for b in range(-(-width // UNIT_BLOCK)):
        rng = draw_generator(seed, draw, layer, b)
        blocks.append(rng.standard_normal((fan_in, UNIT_BLOCK)))
    return np.concatenate(blocks, axis=1)[:, :width]


def _readout_inputs(mc, a_hat, xh, draw):
    """Sample every layer but the last; return what the last layer reads
    (already propagated where the variant propagates) and its weight std."""
    if mc.layers == 1:
        return xh, np.sqrt(mc.delta_w)
    h = mc.width
    sd_hidden = np.sqrt(mc.delta_w / h)
    z = xh @ (np.sqrt(mc.delta_w) * _weights(mc.seed, draw, 0, xh.shape[1], h))
    for layer in range(1, mc.layers - 1):
        w = sd_hidden * _weights(mc.seed, draw, layer, h, h)
        z = propagate(a_hat, np.maximum(z, 0.0) @ w)
    feats = np.maximum(z, 0.0)
    if mc.variant != "small":
        feats = propagate(a_hat, feats)
    return feats, sd_hidden


def _propagated(mc, a_hat, x):
    if mc.base != "inner_product":
        raise ValueError(
            f"Monte-Carlo sampling is exact only for the inner_product base kernel, got {mc.base!r}"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return propagate(a_hat, x)


def sample_gcn_outputs(mc, a_hat, x):
    """Outputs of ``mc.samples`` independently drawn GCNs, one row per draw.

    Returns an ``(S, N)`` array. Only the inner-product base kernel has an
    exact finite-width counterpart; other kernels raise ``ValueError``.
    """
    xh = _propagated(mc, a_hat, x)
    out = np.empty((mc.samples, a_hat.n_nodes))
    for s in range(mc.samples):
        feats, sd = _readout_inputs(mc, a_hat, xh, s)
        w = _weights(mc.seed, s, mc.layers - 1, feats.shape[1], 1)[:, 0]
        out[s] = feats @ (sd * w)
    return out


def readout_second_moments(mc, a_hat, x):
    """Per-draw second moment of the outputs with the readout layer
    integrated out exactly, ``sd^2 F F^T``; shape ``(S, N, N)``.

    Hidden weights use the same streams as :func:`sample_gcn_outputs`. The
    result equals the empirical covariance of infinitely many output units
    sharing one set of hidden weights.
    """
    xh = _propagated(mc, a_hat, x)
    out = np.empty((mc.samples, a_hat.n_nodes, a_hat.n_nodes))
    for s in range(mc.samples):
        feats, sd = _readout_inputs(mc, a_hat, xh, s)
        out[s] = sd**2 * (feats @ feats.T)
    return out


def empirical_covariance(samples):
    """Uncentered second moment ``(1/S) sum_s z_s z_s^T`` (prior mean is 0)."""
    z = np.asarray(samples, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeError(f"samples must be 2-D (S, N), got shape {z.shape}")
    if z.shape[0] < 2:
        raise ValueError(f"need at least 2 samples, got {z.shape[0]}")
    c = z.T @ z / z.shape[0]
    return 0.5 * (c + c.T)


def kernel_discrepancy(analytic, empirical):
    """Relative Frobenius error ``|A - E|_F / |A|_F`` (absolute if A is 0)."""
    a = np.asarray(analytic, dtype=np.float64)
    e = np.asarray(empirical, dtype=np.float64)
    if a.shape != e.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {e.shape}")
    denom = np.linalg.norm(a)
    diff = np.linalg.norm(a - e)
    return float(diff / denom) if denom > 0 else float(diff)


def estimate_covariance(mc, a_hat, x):
    """Empirical output covariance of ``mc.samples`` random GCNs."""
    if mc.readout == "sample":
        return empirical_covariance(sample_gcn_outputs(mc, a_hat, x))
    c = readout_second_moments(mc, a_hat, x).mean(axis=0)
    return 0.5 * (c + c.T)


def width_sweep(mc, a_hat, x, widths, pi_scaling=False):
    """Discrepancy and wall time for each width, other settings from ``mc``."""
    analytic = build_kernel(mc.kernel_config(pi_scaling), a_hat, x)
    rows = []
    for h in widths:
        cfg = McConfig(**{**mc.__dict__, "width": int(h)})
        t0 = time.perf_counter()
        emp = estimate_covariance(cfg, a_hat, x)
        rows.append(
            {
                "width": int(h),
                "samples": cfg.samples,
                "discrepancy": kernel_discrepancy(analytic, emp),
                "seconds": time.perf_counter() - t0,
            }
        )
    return rows


def random_instance(seed, max_nodes=8, max_features=4, edge_prob=0.4):
    """Small random graph and Gaussian features for oracle runs."""
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(4, max_nodes + 1))
    m = int(rng.integers(2, max_features + 1))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    g = Graph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
    return normalize_adjacency(g), rng.standard_normal((n, m))
