"""Command-line entry point for GCN Gaussian-process node classification.

Every flag has a JSON equivalent in the ``--config`` file; flags win. Exit
codes: 0 success, 1 validation failure, 2 usage or I/O error.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .cache import KernelCache, content_hash, resolve_cache_dir
from .exceptions import FormatError, KernelError
from .experiments import Dataset, GridSpec, benchmark_scaling, evaluate, grid_search, knn_graph
from .graph import normalize_adjacency
from .kernel import KernelConfig, build_kernel
from .mc import McConfig, random_instance, width_sweep
from .regression import encode_labels, posterior

logger = logging.getLogger("gpgc")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flag dest -> key inside the "kernel" config section
_KERNEL_FLAGS = {
    "variant": "variant",
    "delta_w": "delta_w",
    "n_layers": "n_layers",
    "bias_variance": "bias_variance",
    "pi_scaling": "pi_scaling",
    "sigma_tau_sq": "sigma_tau_sq",
    "jitter": "jitter",
}
_BASE_FLAGS = {"base": "kind", "length_scale": "length_scale", "bias": "bias", "degree": "degree"}


class UsageError(Exception):
    pass


def _csv_floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _csv_ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _add_data_args(p, labels=False):
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--n-nodes", type=int, help="node count (default: largest id + 1)")
    p.add_argument("--features", help="feature matrix, CSV or GPGCMAT1")
    if labels:
        p.add_argument("--labels", help="node_id,label CSV")
        p.add_argument("--split", help="split JSON")


def _add_kernel_args(p):
    g = p.add_argument_group("kernel")
    g.add_argument("--variant", choices=["small", "big", "deep"])
    g.add_argument("--n-layers", type=int)
    g.add_argument("--delta-w", type=float)
    g.add_argument("--base", choices=["inner_product", "arccosine", "polynomial", "se"])
    g.add_argument("--length-scale", type=float)
    g.add_argument("--bias", type=float)
    g.add_argument("--degree", type=float)
    g.add_argument("--bias-variance", type=float)
    g.add_argument("--pi-scaling", action="store_true", default=None)
    g.add_argument("--sigma-tau-sq", type=float)
    g.add_argument("--jitter", type=float)
    g.add_argument("--cache-dir", help="kernel cache directory (overridden by $GPGC_CACHE_DIR)")


def build_parser():
    parser = argparse.ArgumentParser(prog="gpgc", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON run config; flags override it")
    parser.add_argument("--seed", type=int, help="global random seed")
    parser.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kernel", help="build and save the GP covariance")
    _add_data_args(p)
    _add_kernel_args(p)
    p.add_argument("--output", help="kernel output path (GPGCMAT1)")

    p = sub.add_parser("predict", help="fit the GP posterior and classify")
    _add_data_args(p, labels=True)
    _add_kernel_args(p)
    p.add_argument("--kernel", dest="kernel_file", help="precomputed kernel file")
    p.add_argument("--mode", choices=["standard", "x"], help="x also fits on validation labels")
    p.add_argument("--output", help="predictions CSV")
    p.add_argument("--no-mean", action="store_true", default=None, help="omit mean columns")

    p = sub.add_parser("grid-search", help="select hyperparameters on the validation set")
    _add_data_args(p, labels=True)
    p.add_argument("--variant", choices=["small", "big", "deep"])
    p.add_argument("--n-layers", type=int)
    p.add_argument("--grid-delta-w", type=_csv_floats, help="comma-separated delta_w values")
    p.add_argument("--grid-sigma-tau-sq", type=_csv_floats, help="comma-separated noise values")
    p.add_argument(
        "--grid-bases",
        help="comma-separated kinds, e.g. arccosine,inner_product,polynomial,se",
    )
    p.add_argument("--output", help="write the full report as JSON here")

    p = sub.add_parser("validate-mc", help="compare the kernel with sampled finite GCNs")
    _add_data_args(p)
    p.add_argument("--variant", choices=["small", "big", "deep"])
    p.add_argument("--n-layers", type=int)
    p.add_argument("--delta-w", type=float)
    p.add_argument("--width", type=int, help="largest width; also the tested one")
    p.add_argument("--widths", type=_csv_ints, help="comma-separated widths to tabulate")
    p.add_argument("--samples", type=int)
    p.add_argument("--readout", choices=["marginal", "sample"])
    p.add_argument("--pi-scaling", action="store_true", default=None)
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("knn-graph", help="build a kNN graph from features")
    p.add_argument("--features")
    p.add_argument("--k", type=int)
    p.add_argument("--output", help="edge-list output path")

    p = sub.add_parser("benchmark", help="time build_kernel against graph size")
    p.add_argument("--sizes", type=_csv_ints)
    p.add_argument("--avg-degree", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--n-features", type=int)
    p.add_argument("--output", help="write results as JSON here")
    return parser


def _load_config(path):
    if not path:
        return {}
    p = Path(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", p, exc.lineno) from None


def _merge(args, config):
    """Flatten flags over the config file into one settings dict."""
    settings = {k: v for k, v in config.items() if k not in ("kernel", "mc", "grid")}
    kernel = dict(config.get("kernel", {}))
    base = kernel.pop("base", {})
    base = {"kind": base} if isinstance(base, str) else dict(base)
    mc = dict(config.get("mc", {}))
    grid = dict(config.get("grid", {}))
    for key, value in vars(args).items():
        if value is None:
            continue
        if key in _KERNEL_FLAGS:
            kernel[_KERNEL_FLAGS[key]] = value
            mc_key = {"variant": "variant", "n_layers": "n_layers", "delta_w": "delta_w"}.get(key)
            if mc_key:
                mc[mc_key] = value
            if key in ("variant", "n_layers"):
                grid[key] = value
        elif key in _BASE_FLAGS:
            base[_BASE_FLAGS[key]] = value
        elif key in ("width", "samples", "readout"):
            mc[key] = value
        elif key.startswith("grid_"):
            grid[key[5:]] = value
        else:
            settings[key] = value
    if base:
        kernel["base"] = base
    settings["kernel"] = kernel
    settings["mc"] = mc
    settings["grid"] = grid
    return settings


def _require(settings, *keys):
    missing = [k for k in keys if not settings.get(k)]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _kernel_config(settings):
    return KernelConfig.from_dict(settings["kernel"])


def _load_graph_features(settings):
    _require(settings, "graph", "features")
    graph = io.read_edge_list(settings["graph"], settings.get("n_nodes"))
    x = io.read_matrix(settings["features"])
    if settings.get("n_nodes") is None and x.shape[0] > graph.n_nodes:
        # isolated trailing nodes are only known from the feature file
        graph = io.read_edge_list(settings["graph"], x.shape[0])
    if x.shape[0] != graph.n_nodes:
        raise FormatError(
            f"{x.shape[0]} feature rows but the graph has {graph.n_nodes} nodes", settings["features"]
        )
    return graph, x


def _cache_key(settings, cfg, n_nodes):
    return content_hash(settings["graph"], settings["features"], cfg, n_nodes)


def _kernel_from_cache(settings, cfg, a_hat, x):
    cache_dir = resolve_cache_dir(settings.get("cache_dir"))
    key = _cache_key(settings, cfg, a_hat.n_nodes)
    if cache_dir is not None:
        cached = KernelCache(cache_dir).get(key)
        if cached is not None and cached.shape == (a_hat.n_nodes, a_hat.n_nodes):
            logger.info("kernel cache hit %s", key[:12])
            return cached, key, 0.0
    t0 = time.perf_counter()
    kernel = build_kernel(cfg, a_hat, x)
    elapsed = time.perf_counter() - t0
    if cache_dir is not None:
        KernelCache(cache_dir).put(key, kernel)
    return kernel, key, elapsed


def cmd_build_kernel(settings):
    graph, x = _load_graph_features(settings)
    cfg = _kernel_config(settings)
    a_hat = normalize_adjacency(graph)
    kernel, key, elapsed = _kernel_from_cache(settings, cfg, a_hat, x)
    out = Path(settings.get("output") or "kernel.gpgcmat")
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_matrix(out, kernel)
    sidecar = {
        "hash": key,
        "n_nodes": graph.n_nodes,
        "config": cfg.kernel_fields(),
        "graph": str(settings["graph"]),
        "features": str(settings["features"]),
    }
    out.with_suffix(out.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {graph.n_nodes}x{graph.n_nodes} kernel to {out} ({elapsed:.3f} s)")
    return EXIT_OK


def _load_dataset(settings):
    _require(settings, "split")
    graph, x = _load_graph_features(settings)
    labels = io.read_labels(settings["labels"]) if settings.get("labels") else {}
    split = io.read_split(settings["split"], labels)
    return Dataset(graph, x, split, name=Path(settings["features"]).stem)


def cmd_predict(settings):
    data = _load_dataset(settings)
    cfg = _kernel_config(settings)
    mode = settings.get("mode") or "standard"
    split = data.split
    if settings.get("kernel_file"):
        kernel = io.read_matrix(settings["kernel_file"])
        if kernel.shape != (data.graph.n_nodes,) * 2:
            raise FormatError(f"kernel shape {kernel.shape} does not match the graph", settings["kernel_file"])
    else:
        kernel, _, _ = _kernel_from_cache(settings, cfg, data.a_hat, data.features)
    fit_ids = list(split.train_ids) + (list(split.val_ids) if mode == "x" else [])
    post = posterior(kernel, fit_ids, encode_labels(split, fit_ids), cfg.sigma_tau_sq, cfg.jitter)
    out = settings.get("output") or "predictions.csv"
    io.write_predictions(out, post, include_mean=not settings.get("no_mean"))
    print(f"wrote {len(post.query_ids)} predictions to {out}")
    if split.has_test_labels:
        pred = dict(zip(post.query_ids.tolist(), np.argmax(post.mean, axis=1).tolist()))
        correct = sum(pred[i] == split.labels[i] for i in split.test_ids)
        print(f"test accuracy: {correct / len(split.test_ids):.4f} ({correct}/{len(split.test_ids)}, mode={mode})")
    return EXIT_OK


def cmd_grid_search(settings):
    data = _load_dataset(settings)
    grid_cfg = dict(settings["grid"])
    if isinstance(grid_cfg.get("bases"), str):
        grid_cfg["bases"] = [k.strip() for k in grid_cfg["bases"].split(",") if k.strip()]
    grid = GridSpec.from_dict(grid_cfg)
    result = grid_search(data, grid, n_jobs=settings.get("threads") or 1)
    report = {"selected": result.config.to_dict(), "val_accuracy": result.accuracy}
    print(json.dumps(report, indent=2))
    if settings.get("output"):
        full = {**report, "grid": grid.to_dict(), "table": result.table}
        if data.split.test_ids and data.split.has_test_labels:
            full["test"] = evaluate(data, result.config).to_dict()
        Path(settings["output"]).write_text(json.dumps(full, indent=2) + "\n")
    return EXIT_OK if result.accuracy >= 0 else EXIT_FAIL


def cmd_validate_mc(settings):
    mc_cfg = dict(settings["mc"])
    mc_cfg.setdefault("width", 4096)
    mc_cfg.setdefault("samples", 400)
    if settings.get("seed") is not None:
        mc_cfg["seed"] = settings["seed"]
    mc = McConfig(**mc_cfg)
    if settings.get("graph") or settings.get("features"):
        graph, x = _load_graph_features(settings)
        a_hat = normalize_adjacency(graph)
    else:
        a_hat, x = random_instance(mc.seed)
    widths = settings.get("widths") or [mc.width]
    if mc.width not in widths:
        widths = list(widths) + [mc.width]
    tol = settings.get("tolerance", 0.08)
    rows = width_sweep(mc, a_hat, x, sorted(widths), pi_scaling=bool(settings["kernel"].get("pi_scaling")))
    print(f"nodes={a_hat.n_nodes} features={x.shape[1]} variant={mc.variant} readout={mc.readout} seed={mc.seed}")
    print(f"{'width':>8} {'samples':>8} {'discrepancy':>12} {'seconds':>9}")
    for r in rows:
        print(f"{r['width']:>8d} {r['samples']:>8d} {r['discrepancy']:>12.5f} {r['seconds']:>9.3f}")
    final = next(r for r in rows if r["width"] == mc.width)["discrepancy"]
    ok = final < tol
    print(f"{'PASS' if ok else 'FAIL'}: discrepancy {final:.5f} {'<' if ok else '>='} tolerance {tol}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_knn_graph(settings):
    _require(settings, "features", "k")
    x = io.read_matrix(settings["features"])
    k = int(settings["k"])
    if k >= x.shape[0] or k < 1:
        raise UsageError(f"--k must be in [1, {x.shape[0] - 1}] for {x.shape[0]} nodes, got {k}")
    g = knn_graph(x, k)
    out = settings.get("output") or "graph.edges"
    io.write_edge_list(out, g)
    print(f"wrote {g.n_edges} edges over {g.n_nodes} nodes to {out}")
    return EXIT_OK


def cmd_benchmark(settings):
    res = benchmark_scaling(
        settings.get("sizes") or [256, 512, 1024, 2048],
        avg_degree=settings.get("avg_degree") or 10,
        trials=settings.get("trials") or 3,
        n_features=settings.get("n_features") or 32,
        seed=settings.get("seed") or 0,
    )
    print(f"{'nodes':>8} {'edges':>8} {'max_deg':>8} {'seconds':>10}")
    for r in res["rows"]:
        print(f"{r['n_nodes']:>8d} {r['n_edges']:>8d} {r['max_degree']:>8d} {r['seconds']:>10.4f}")
    slope = res["slope"]
    print("log-log slope: " + ("undefined (single size)" if slope is None else f"{slope:.3f}"))
    if settings.get("output"):
        Path(settings["output"]).write_text(json.dumps(res, indent=2) + "\n")
    return EXIT_OK


COMMANDS = {
    "build-kernel": cmd_build_kernel,
    "predict": cmd_predict,
    "grid-search": cmd_grid_search,
    "validate-mc": cmd_validate_mc,
    "knn-graph": cmd_knn_graph,
    "benchmark": cmd_benchmark,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    command = args.command
    try:
        settings = _merge(args, _load_config(args.config))
        settings.pop("command", None)
        threads = settings.get("threads") or os.cpu_count()
        with threadpool_limits(limits=threads):
            return COMMANDS[command](settings)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gpgc {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else ""
        print(f"gpgc {command}: error: file not found: {name or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"gpgc {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KernelError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"gpgc {command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
