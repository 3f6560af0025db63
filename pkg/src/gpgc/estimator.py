"""scikit-learn style wrappers.

Both estimators are transductive: the graph is fixed at construction and
``X`` holds the features of every node in it. Following
:class:`sklearn.semi_supervised.LabelPropagation`, unlabeled nodes carry the
label ``-1`` in ``y``.

>>> import numpy as np
>>> from gpgc import GPGCClassifier
>>> adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
>>> X = np.array([[1.0, 0.1], [0.9, 0.3], [0.1, 1.0]])
>>> clf = GPGCClassifier(adjacency=adj, base_kernel="arccosine").fit(X, [0, -1, 1])
>>> clf.transduction_.tolist()
[0, 0, 1]
"""

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .base_kernels import BaseKernelSpec
from .graph import Graph, NormalizedAdjacency, normalize_adjacency
from .kernel import KernelConfig, build_kernel
from .regression import posterior

__all__ = ["GPGCKernel", "GPGCClassifier", "as_normalized_adjacency"]


def as_normalized_adjacency(adjacency):
    """Accept a Graph, a NormalizedAdjacency, or a square (sparse) matrix."""
    if adjacency is None:
        raise ValueError("adjacency is required")
    if isinstance(adjacency, NormalizedAdjacency):
        return adjacency
    if isinstance(adjacency, Graph):
        return normalize_adjacency(adjacency)
    if sp.issparse(adjacency) or hasattr(adjacency, "__array__") or isinstance(adjacency, list):
        return normalize_adjacency(Graph.from_adjacency(adjacency))
    raise TypeError(f"unsupported adjacency type {type(adjacency).__name__}")


class _KernelParams:
    def _kernel_config(self, **extra):
        base = BaseKernelSpec(
            self.base_kernel,
            length_scale=self.length_scale,
            bias=self.bias,
            degree=self.degree,
        )
        return KernelConfig(
            variant=self.variant,
            delta_w=self.delta_w,
            base=base,
            n_layers=self.n_layers,
            bias_variance=self.bias_variance,
            pi_scaling=self.pi_scaling,
            **extra,
        )

    def _check_nodes(self, X, a_hat):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] != a_hat.n_nodes:
            raise ValueError(f"X has {X.shape[0]} rows but the graph has {a_hat.n_nodes} nodes")
        return X


class GPGCKernel(_KernelParams, TransformerMixin, BaseEstimator):
    """Maps node features to the N x N GCN Gaussian-process covariance.

    Parameters mirror :class:`gpgc.kernel.KernelConfig`; ``base_kernel`` is
    one of ``"inner_product"``, ``"arccosine"``, ``"polynomial"``, ``"se"``.
    """

    def __init__(
        self,
        adjacency=None,
        variant="big",
        delta_w=1.0,
        base_kernel="inner_product",
        length_scale=1.0,
        bias=0.5,
        degree=1.0,
        n_layers=2,
        bias_variance=0.0,
        pi_scaling=False,
    ):
        self.adjacency = adjacency
        self.variant = variant
        self.delta_w = delta_w
        self.base_kernel = base_kernel
        self.length_scale = length_scale
        self.bias = bias
        self.degree = degree
        self.n_layers = n_layers
        self.bias_variance = bias_variance
        self.pi_scaling = pi_scaling

    def fit(self, X, y=None):
        self.a_hat_ = as_normalized_adjacency(self.adjacency)
        X = self._check_nodes(X, self.a_hat_)
        self.config_ = self._kernel_config()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "a_hat_")
        X = self._check_nodes(X, self.a_hat_)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return build_kernel(self.config_, self.a_hat_, X)


class GPGCClassifier(_KernelParams, ClassifierMixin, BaseEstimator):
    """Transductive node classifier: GP regression on one-hot labels with the
    GCN kernel, then row-wise argmax.

    Parameters
    ----------
    adjacency : Graph, NormalizedAdjacency or array-like of shape (N, N)
        Graph over the nodes; nonzero off-diagonal entries are edges.
    variant : {"small", "big", "deep"}
        ``"deep"`` uses ``n_layers`` weight layers.
    sigma_tau_sq : float
        Observation-noise variance added to the labeled block.
    jitter : float or None
        Extra diagonal; None picks ``1e-8 * mean labeled variance``.

    Attributes
    ----------
    classes_ : ndarray
    kernel_ : ndarray of shape (N, N)
    mean_ : ndarray of shape (N, n_classes)
        Posterior mean at every node.
    transduction_ : ndarray of shape (N,)
        Given labels for labeled nodes, predictions elsewhere.
    """

    def __init__(
        self,
        adjacency=None,
        variant="big",
        delta_w=1.0,
        base_kernel="inner_product",
        length_scale=1.0,
        bias=0.5,
        degree=1.0,
        n_layers=2,
        bias_variance=0.0,
        pi_scaling=False,
        sigma_tau_sq=0.01,
        jitter=None,
    ):
        self.adjacency = adjacency
        self.variant = variant
        self.delta_w = delta_w
        self.base_kernel = base_kernel
        self.length_scale = length_scale
        self.bias = bias
        self.degree = degree
        self.n_layers = n_layers
        self.bias_variance = bias_variance
        self.pi_scaling = pi_scaling
        self.sigma_tau_sq = sigma_tau_sq
        self.jitter = jitter

    def fit(self, X, y):
        a_hat = as_normalized_adjacency(self.adjacency)
        X = self._check_nodes(X, a_hat)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        labeled = np.flatnonzero(y != -1)
        if labeled.size == 0:
            raise ValueError("y has no labeled nodes (all -1)")
        self.classes_, codes = np.unique(y[labeled], return_inverse=True)
        targets = np.eye(len(self.classes_))[codes]

        cfg = self._kernel_config(sigma_tau_sq=self.sigma_tau_sq, jitter=self.jitter)
        self.kernel_ = build_kernel(cfg, a_hat, X)
        post = posterior(
            self.kernel_,
            labeled,
            targets,
            sigma_tau_sq=self.sigma_tau_sq,
            jitter=self.jitter,
            query_ids=np.arange(X.shape[0]),
        )
        self.mean_ = post.mean
        self.jitter_ = post.jitter
        self.transduction_ = self.classes_[np.argmax(self.mean_, axis=1)]
        self.transduction_[labeled] = y[labeled]
        self.labeled_ids_ = labeled
        self.n_features_in_ = X.shape[1]
        self._fit_X = X
        return self

    def _check_same_nodes(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if X.shape != self._fit_X.shape or not np.array_equal(X, self._fit_X):
            raise ValueError("transductive model: X must be the feature matrix passed to fit")

    def decision_function(self, X):
        """Posterior mean per node and class."""
        self._check_same_nodes(X)
        return self.mean_

    def predict(self, X):
        """Argmax of the posterior mean for every node (ties to the first
        class)."""
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
