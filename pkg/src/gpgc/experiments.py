"""Datasets, kNN graphs, grid search, evaluation and timing harness."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import itertools
import time
import warnings

import numpy as np

from .base_kernels import BaseKernelSpec
from .graph import Graph, normalize_adjacency
from .kernel import KernelConfig, build_kernel, build_unit_kernel, n_weight_layers
from .regression import LabeledSplit, encode_labels, posterior

__all__ = [
    "Dataset",
    "GridSpec",
    "GridResult",
    "EvaluationReport",
    "knn_graph",
    "random_graph",
    "make_two_clusters",
    "grid_search",
    "evaluate",
    "benchmark_scaling",
]



@dataclass
class Dataset:
    graph: Graph
    features: np.ndarray
    split: LabeledSplit
    name: str = "dataset"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] != self.graph.n_nodes:
            raise ValueError(
                f"features of shape {self.features.shape} do not match {self.graph.n_nodes} nodes"
            )
        self.split.check_nodes(self.graph.n_nodes)
        self._a_hat = None

    @property
    def a_hat(self):
        if self._a_hat is None:
            self._a_hat = normalize_adjacency(self.graph)
        return self._a_hat


def _default_bases():
    return [
        BaseKernelSpec("arccosine"),
        BaseKernelSpec("inner_product"),
        BaseKernelSpec("polynomial", bias=0.5),
        BaseKernelSpec("se", length_scale=1.0),
    ]


@dataclass
class GridSpec:
    """Search space. Points are enumerated base-major, then ``delta_w``,
    then ``sigma_tau_sq``; that order also breaks accuracy ties."""

    delta_w: list = field(default_factory=lambda: [0.005 * 2**i for i in range(9)])
    bases: list = field(default_factory=_default_bases)
    sigma_tau_sq: list = field(default_factory=lambda: [0.001, 0.01, 0.1, 1.0])
    variant: str = "big"
    n_layers: int = 2
    bias_variance: float = 0.0
    pi_scaling: bool = False

    def __post_init__(self):
        self.bases = [b if isinstance(b, BaseKernelSpec) else BaseKernelSpec.from_dict(b) for b in self.bases]
        for name in ("delta_w", "bases", "sigma_tau_sq"):
            if not getattr(self, name):
                raise ValueError(f"grid {name} must be nonempty")

    def configs(self):
        for base, dw, tau in itertools.product(self.bases, self.delta_w, self.sigma_tau_sq):
            yield KernelConfig(
                variant=self.variant,
                n_layers=self.n_layers,
                delta_w=dw,
                base=base,
                bias_variance=self.bias_variance,
                pi_scaling=self.pi_scaling,
                sigma_tau_sq=tau,
            )

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "bases" in d:
            d["bases"] = [BaseKernelSpec.from_dict(b) for b in d["bases"]]
        return cls(**d)

    def to_dict(self):
        return {
            "delta_w": list(self.delta_w),
            "bases": [b.to_dict() for b in self.bases],
            "sigma_tau_sq": list(self.sigma_tau_sq),
            "variant": self.variant,
            "n_layers": self.n_layers,
            "bias_variance": self.bias_variance,
            "pi_scaling": self.pi_scaling,
        }


@dataclass
class GridResult:
    config: KernelConfig
    accuracy: float
    table: list


@dataclass
class EvaluationReport:
    accuracy: float
    per_class_accuracy: list
    confusion: np.ndarray
    kernel_seconds: float
    solve_seconds: float
    n_fit: int
    n_test: int
    mode: str
    config: KernelConfig

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "confusion": self.confusion.tolist(),
            "kernel_seconds": self.kernel_seconds,
            "solve_seconds": self.solve_seconds,
            "n_fit": self.n_fit,
            "n_test": self.n_test,
            "mode": self.mode,
            "config": self.config.to_dict(),
        }

    def format_table(self):
        lines = [
            f"mode            {self.mode}",
            f"fit nodes       {self.n_fit}",
            f"test nodes      {self.n_test}",
            f"accuracy        {self.accuracy:.4f}",
            f"kernel build s  {self.kernel_seconds:.4f}",
            f"posterior s     {self.solve_seconds:.4f}",
            "per-class accuracy:",
        ]
        for c, acc in enumerate(self.per_class_accuracy):
            shown = "   n/a" if acc is None else f"{acc:.4f}"
            lines.append(f"  class {c:<4d} {shown}")
        return "\n".join(lines)


def knn_graph(features, k):
    """Undirected kNN graph: each node links to its ``k`` nearest other nodes
    (Euclidean); the union of all choices is the edge set.

    Distance ties go to the lower node index.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of nodes ({n})")
    sq = np.einsum("ij,ij->i", x, x)
    chunk = max(1, 2**22 // max(n, 1))
    edges = []
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (x[start:stop] @ x.T)
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(start, stop)
        d2[rows - start, rows] = np.inf
        # stable sort keeps lower indices first among equal distances
        nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
        edges.append(np.column_stack([np.repeat(rows, k), nbrs.ravel()]))
    return Graph(n, np.concatenate(edges))


def random_graph(n_nodes, avg_degree, rng):
    """Uniform random simple graph with roughly ``avg_degree`` mean degree."""
    n_edges = int(round(n_nodes * avg_degree / 2))
    pairs = rng.integers(0, n_nodes, size=(2 * n_edges + 16, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    pairs = pairs[rng.permutation(len(pairs))[:n_edges]]
    return Graph(n_nodes, pairs)


def make_two_clusters(
    n_per_class=32,
    n_features=4,
    separation=6.0,
    sigma=1.0,
    k=5,
    n_train_per_class=4,
    n_val_per_class=4,
    seed=0,
):
    """Two isotropic Gaussian clusters whose means are ``separation * sigma``
    apart, connected by a kNN graph. Remaining nodes form the test set."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(n_features)
    direction /= np.linalg.norm(direction)
    centers = np.stack([-0.5 * separation * sigma * direction, 0.5 * separation * sigma * direction])
    y = np.repeat(np.arange(2), n_per_class)
    x = centers[y] + sigma * rng.standard_normal((2 * n_per_class, n_features))
    order = rng.permutation(len(y))
    x, y = x[order], y[order]

    train, val, test = [], [], []
    for c in range(2):
        ids = np.flatnonzero(y == c)
        train += ids[:n_train_per_class].tolist()
        val += ids[n_train_per_class : n_train_per_class + n_val_per_class].tolist()
        test += ids[n_train_per_class + n_val_per_class :].tolist()
    split = LabeledSplit(
        train_ids=sorted(train),
        val_ids=sorted(val),
        test_ids=sorted(test),
        labels={i: int(c) for i, c in enumerate(y)},
        n_classes=2,
    )
    return Dataset(knn_graph(x, k), x, split, name=f"two-clusters-{seed}")


def _accuracy(split, post, ids):
    pred = np.argmax(post.mean, axis=1)
    truth = np.array([split.labels[i] for i in ids])
    return float(np.mean(pred == truth)) if len(ids) else float("nan")


def _fit_predict(split, gamma, fit_ids, query_ids, cfg):
    y = encode_labels(split, fit_ids)
    return posterior(gamma, fit_ids, y, cfg.sigma_tau_sq, cfg.jitter, query_ids=query_ids)


def _score_base(data, grid, base):
    """Validation accuracy of every grid point sharing ``base``."""
    split = data.split
    cfgs = [c for c in grid.configs() if c.base == base]
    rows = []
    try:
        if grid.bias_variance == 0:
            unit = build_unit_kernel(cfgs[0], data.a_hat, data.features)
            power = n_weight_layers(cfgs[0])
    except Exception as exc:  # one bad base kernel must not end the sweep
        warnings.warn(f"grid point {base.label()} failed: {exc}", stacklevel=2)
        return [(c, -1.0, str(exc)) for c in cfgs]
    for cfg in cfgs:
        try:
            if grid.bias_variance == 0:
                gamma = unit * cfg.delta_w**power
            else:
                gamma = build_kernel(cfg, data.a_hat, data.features)
            post = _fit_predict(split, gamma, list(split.train_ids), list(split.val_ids), cfg)
            rows.append((cfg, _accuracy(split, post, split.val_ids), None))
        except Exception as exc:
            warnings.warn(f"grid point {cfg.to_dict()} failed: {exc}", stacklevel=2)
            rows.append((cfg, -1.0, str(exc)))
    return rows


def grid_search(data, grid, n_jobs=1):
    """Pick the grid point with the highest validation accuracy.

    Only training labels are used for fitting. With ``bias_variance == 0``
    the kernel is built once per base kernel at ``delta_w = 1`` and rescaled
    by ``delta_w ** n_layers``. Failing points score -1 with a warning.
    """
    if not data.split.val_ids:
        raise ValueError("grid search needs a nonempty validation set")
    bases = list(dict.fromkeys(grid.bases))
    if n_jobs == 1:
        per_base = [_score_base(data, grid, b) for b in bases]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_base = list(pool.map(lambda b: _score_base(data, grid, b), bases))
    by_key = {}
    for rows in per_base:
        for cfg, acc, err in rows:
            by_key[_config_key(cfg)] = (cfg, acc, err)

    table = []
    best = None
    for cfg in grid.configs():
        cfg, acc, err = by_key[_config_key(cfg)]
        table.append({"config": cfg.to_dict(), "val_accuracy": acc, "error": err})
        if best is None or acc > best[1]:
            best = (cfg, acc)
    return GridResult(config=best[0], accuracy=best[1], table=table)


def _config_key(cfg):
    return repr(sorted(cfg.to_dict().items(), key=lambda kv: kv[0]))


def evaluate(data, cfg, mode="standard", kernel=None):
    """Test accuracy of ``cfg``; mode ``"x"`` also fits on validation labels."""
    mode = mode.lower()
    if mode not in ("standard", "x"):
        raise ValueError(f"mode must be 'standard' or 'x', got {mode!r}")
    split = data.split
    if not split.test_ids:
        raise ValueError("evaluation needs a nonempty test set")
    fit_ids = list(split.train_ids) + (list(split.val_ids) if mode == "x" else [])
    test_ids = list(split.test_ids)

    t0 = time.perf_counter()
    gamma = build_kernel(cfg, data.a_hat, data.features) if kernel is None else kernel
    t1 = time.perf_counter()
    post = _fit_predict(split, gamma, fit_ids, test_ids, cfg)
    t2 = time.perf_counter()

    pred = np.argmax(post.mean, axis=1)
    truth = np.array([split.labels[i] for i in test_ids])
    c = split.n_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (truth, pred), 1)
    support = confusion.sum(axis=1)
    per_class = [float(confusion[i, i] / support[i]) if support[i] else None for i in range(c)]
    return EvaluationReport(
        accuracy=float(np.mean(pred == truth)),
        per_class_accuracy=per_class,
        confusion=confusion,
        kernel_seconds=t1 - t0,
        solve_seconds=t2 - t1,
        n_fit=len(fit_ids),
        n_test=len(test_ids),
        mode=mode,
        config=cfg,
    )


def benchmark_scaling(
    sizes,
    avg_degree=10,
    trials=3,
    n_features=32,
    base="inner_product",
    seed=0,
):
    """Time ``build_kernel`` (big variant) on random graphs of each size.

    Returns ``{"rows": [...], "slope": float | None}`` where ``slope`` is the
    least-squares log-log slope of the best-of-``trials`` time against N.
    """
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    rng = np.random.default_rng(seed)
    cfg = KernelConfig(variant="big", base=base)
    rows = []
    for n in sizes:
        g = random_graph(n, avg_degree, rng)
        a_hat = normalize_adjacency(g)
        x = rng.random((n, n_features)) + 0.01
        times = []
        for _ in range(max(1, trials)):
            t0 = time.perf_counter()
            build_kernel(cfg, a_hat, x)
            times.append(time.perf_counter() - t0)
        rows.append(
            {"n_nodes": n, "max_degree": a_hat.max_degree, "n_edges": g.n_edges, "seconds": min(times)}
        )
    slope = None
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r["n_nodes"] for r in rows]), np.log([r["seconds"] for r in rows]), 1)[0])
    return {"rows": rows, "slope": slope, "avg_degree": avg_degree}
