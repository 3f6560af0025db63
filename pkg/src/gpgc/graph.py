"""Undirected graphs, the renormalized GCN adjacency and sparse propagation.

The propagation operator is the first-order GCN filter

    A_hat = D~^{-1/2} (A + I) D~^{-1/2}

where ``D~`` holds the degrees of the self-looped adjacency. Self-loops are
never stored in a :class:`Graph`; :func:`normalize_adjacency` adds them.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import ShapeError

__all__ = [
    "Graph",
    "NormalizedAdjacency",
    "normalize_adjacency",
    "propagate",
    "sandwich",
]


@dataclass(frozen=True)
class Graph:
    """Unweighted undirected graph on ``n_nodes`` vertices.

    ``edges`` is an ``(E, 2)`` integer array of unordered pairs. On
    construction pairs are canonicalized to ``i < j``, sorted and
    deduplicated. Self-loops and out-of-range indices raise ``ValueError``.
    """

    n_nodes: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        n = int(self.n_nodes)
        if n < 1:
            raise ValueError(f"n_nodes must be positive, got {self.n_nodes}")
        e = np.asarray(self.edges, dtype=np.int64)
        if e.size == 0:
            e = np.empty((0, 2), dtype=np.int64)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError(f"edges must have shape (E, 2), got {e.shape}")
        if (e < 0).any() or (e >= n).any():
            bad = e[((e < 0) | (e >= n)).any(axis=1)][0]
            raise ValueError(f"edge {tuple(bad)} out of range for {n} nodes")
        loops = e[:, 0] == e[:, 1]
        if loops.any():
            raise ValueError(f"self-loop at node {e[loops][0, 0]} is not allowed")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "edges", e)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_nodes == other.n_nodes and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n_nodes, self.edges.tobytes()))

    @property
    def n_edges(self):
        return len(self.edges)

    def degrees(self):
        """Degrees without self-loops."""
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def adjacency(self):
        """Symmetric 0/1 adjacency as CSR, both triangles stored."""
        n = self.n_nodes
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        data = np.ones(len(rows), dtype=np.float64)
        a = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        a.sort_indices()
        return a

    @classmethod
    def from_adjacency(cls, a):
        """Build from a dense or sparse square matrix; nonzero off-diagonal
        entries become edges (weights and the diagonal are ignored)."""
        a = sp.coo_matrix(a)
        if a.shape[0] != a.shape[1]:
            raise ShapeError(f"adjacency must be square, got {a.shape}")
        mask = (a.row != a.col) & (a.data != 0)
        edges = np.column_stack([a.row[mask], a.col[mask]])
        return cls(a.shape[0], edges)


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Sparse symmetric ``A_hat`` in CSR form with sorted column indices.

    ``max_degree`` counts the self-loop, so it is the largest number of stored
    entries in any row.
    """

    matrix: sp.csr_matrix
    max_degree: int

    @property
    def n_nodes(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def toarray(self):
        return self.matrix.toarray()


def normalize_adjacency(g):
    """Return ``D~^{-1/2} (A + I) D~^{-1/2}`` for graph ``g``."""
    n = g.n_nodes
    a = g.adjacency() + sp.identity(n, format="csr", dtype=np.float64)
    deg = g.degrees().astype(np.float64) + 1.0
    a = a.tocoo()
    # d_i * d_j is commutative in floating point, so the stored matrix is
    # exactly symmetric
    data = 1.0 / np.sqrt(deg[a.row] * deg[a.col])
    diag = a.row == a.col
    data[diag] = 1.0 / deg[a.row[diag]]
    m = sp.csr_matrix((data, (a.row, a.col)), shape=(n, n))
    m.sort_indices()
    max_degree = int(np.diff(m.indptr).max())
    return NormalizedAdjacency(m, max_degree)


def _check_rows(a_hat, x, what):
    if x.shape[0] != a_hat.n_nodes:
        raise ShapeError(
            f"{what} has {x.shape[0]} rows but the adjacency has {a_hat.n_nodes} nodes"
        )


def propagate(a_hat, x):
    """Sparse product ``A_hat @ X``; cost is ``nnz(A_hat) * X.shape[1]``."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"features must be 1-D or 2-D, got {x.ndim}-D")
    _check_rows(a_hat, x, "feature matrix")
    out = np.asarray(a_hat.matrix @ x)
    return out[:, 0] if squeeze else out


def sandwich(a_hat, k):
    """Return ``A_hat K A_hat^T`` for a symmetric dense ``K``.

    Two sparse-dense products are used, so each output entry costs
    ``O(max_degree)`` rather than ``O(N^2)``. The result is symmetrized to
    remove rounding asymmetry.
    """
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ShapeError(f"kernel must be square, got shape {k.shape}")
    _check_rows(a_hat, k, "kernel matrix")
    a = a_hat.matrix
    left = np.asarray(a @ k)
    # A_hat is symmetric, so (A K) A^T = A (A K)^T when K is symmetric
    out = np.asarray(a @ left.T)
    out = 0.5 * (out + out.T)
    return out
