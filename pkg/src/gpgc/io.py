"""Readers and writers for the on-disk formats.

* edge list: one ``i j`` pair per line, ``#`` comments, 0-based ids;
* matrices: CSV of reals, or the binary ``GPGCMAT1`` layout (magic, two
  little-endian uint64 for rows and cols, then row-major little-endian
  float64);
* labels: CSV ``node_id,label``;
* split: JSON ``{"train": [...], "val": [...], "test": [...], "n_classes": C}``;
* predictions: CSV ``node_id,predicted_class[,mean_0..]`` with 17 significant
  digits.
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import FormatError
from .graph import Graph
from .regression import LabeledSplit

MAGIC = b"GPGCMAT1"
_HEADER = struct.Struct("<8sQQ")


def read_edge_list(path, n_nodes=None):
    """Parse an edge list; ``n_nodes`` defaults to the largest id plus one."""
    path = Path(path)
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise FormatError(f"expected two node ids, got {s!r}", path, lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise FormatError(f"node ids must be integers, got {s!r}", path, lineno) from None
            if i < 0 or j < 0:
                raise FormatError(f"negative node id in {s!r}", path, lineno)
            if i == j:
                raise FormatError(f"self-loop at node {i}", path, lineno)
            if n_nodes is not None and max(i, j) >= n_nodes:
                raise FormatError(f"node id {max(i, j)} >= node count {n_nodes}", path, lineno)
            edges.append((i, j))
    if n_nodes is None:
        if not edges:
            raise FormatError("empty edge list and no node count given", path)
        n_nodes = max(max(e) for e in edges) + 1
    return Graph(n_nodes, np.array(edges, dtype=np.int64).reshape(-1, 2))


def write_edge_list(path, graph):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes: {graph.n_nodes}\n")
        for i, j in graph.edges:
            fh.write(f"{i} {j}\n")


def write_matrix(path, m):
    """Write ``m`` in the binary GPGCMAT1 format."""
    m = np.ascontiguousarray(m, dtype="<f8")
    if m.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got {m.ndim}-D")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, m.shape[0], m.shape[1]))
        fh.write(m.tobytes(order="C"))


def _read_binary(path, blob):
    if len(blob) < _HEADER.size:
        raise FormatError("truncated GPGCMAT1 header", path)
    _, rows, cols = _HEADER.unpack_from(blob)
    expected = _HEADER.size + 8 * rows * cols
    if len(blob) != expected:
        raise FormatError(f"expected {expected} bytes for {rows}x{cols} matrix, found {len(blob)}", path)
    return np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)


def _read_csv(path):
    rows = []
    width = None
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if rec[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(v) for v in rec]
            except ValueError:
                raise FormatError(f"non-numeric value in {rec!r}", path, lineno) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise FormatError(f"expected {width} columns, got {len(vals)}", path, lineno)
            if not all(np.isfinite(vals)):
                raise FormatError("non-finite value", path, lineno)
            rows.append(vals)
    if not rows:
        raise FormatError("no rows", path)
    return np.array(rows, dtype=np.float64)


def read_matrix(path):
    """Read a feature or kernel matrix, detecting the binary magic."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        m = _read_binary(path, path.read_bytes())
        if not np.isfinite(m).all():
            raise FormatError("matrix contains non-finite values", path)
        return m
    return _read_csv(path)


def write_matrix_csv(path, m):
    np.savetxt(path, np.atleast_2d(m), delimiter=",", fmt="%.17g")


def read_labels(path):
    """``node_id,label`` CSV (header optional) to a dict."""
    path = Path(path)
    labels = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and rec[0].strip() == "node_id":
                continue
            if len(rec) != 2:
                raise FormatError(f"expected node_id,label, got {rec!r}", path, lineno)
            try:
                labels[int(rec[0])] = int(rec[1])
            except ValueError:
                raise FormatError(f"non-integer entry in {rec!r}", path, lineno) from None
    return labels


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("node_id,label\n")
        for node in sorted(labels):
            fh.write(f"{node},{labels[node]}\n")


def read_split(path, labels=None):
    """Load a split JSON and attach ``labels`` (a dict or a labels path)."""
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if isinstance(labels, (str, Path)):
        labels = read_labels(labels)
    labels = labels or {}
    try:
        n_classes = d.get("n_classes")
        if n_classes is None:
            n_classes = max(labels.values()) + 1
        return LabeledSplit(
            train_ids=d["train"],
            val_ids=d.get("val", []),
            test_ids=d.get("test", []),
            labels=labels,
            n_classes=int(n_classes),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(str(exc), path) from None


def write_split(path, split):
    d = {
        "train": list(split.train_ids),
        "val": list(split.val_ids),
        "test": list(split.test_ids),
        "n_classes": split.n_classes,
    }
    Path(path).write_text(json.dumps(d) + "\n", encoding="utf-8")


def write_predictions(path, post, include_mean=True):
    """Predictions CSV, one row per query node of ``post``."""
    pred = np.argmax(post.mean, axis=1)
    n_classes = post.mean.shape[1]
    header = ["node_id", "predicted_class"]
    if include_mean:
        header += [f"mean_{c}" for c in range(n_classes)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for node, c, row in zip(post.query_ids, pred, post.mean):
            fields = [str(int(node)), str(int(c))]
            if include_mean:
                fields += [f"{v:.17g}" for v in row]
            fh.write(",".join(fields) + "\n")
