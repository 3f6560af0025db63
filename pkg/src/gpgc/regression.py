"""Multi-output GP regression over graph nodes and argmax classification."""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg

from .exceptions import FactorizationError, ShapeError

__all__ = [
    "LabeledSplit",
    "GpPosterior",
    "encode_labels",
    "default_jitter",
    "posterior",
    "classify",
]

logger = logging.getLogger(__name__)

MAX_JITTER_ESCALATIONS = 4


@dataclass(frozen=True)
class LabeledSplit:
    """Disjoint train/validation/test node ids and the known labels.

    ``labels`` maps node id to class index; test labels may be absent when
    only predictions are wanted.
    """

    train_ids: tuple
    val_ids: tuple = ()
    test_ids: tuple = ()
    labels: dict = field(default_factory=dict)
    n_classes: int = 1

    def __post_init__(self):
        for name in ("train_ids", "val_ids", "test_ids"):
            object.__setattr__(self, name, tuple(int(i) for i in getattr(self, name)))
        object.__setattr__(self, "labels", {int(k): int(v) for k, v in self.labels.items()})
        if not self.train_ids:
            raise ValueError("train_ids must be nonempty")
        if self.n_classes < 1:
            raise ValueError(f"n_classes must be positive, got {self.n_classes}")
        seen = set()
        for name in ("train_ids", "val_ids", "test_ids"):
            ids = getattr(self, name)
            if len(set(ids)) != len(ids):
                raise ValueError(f"{name} contains duplicates")
            overlap = seen & set(ids)
            if overlap:
                raise ValueError(f"node {min(overlap)} appears in more than one split")
            seen |= set(ids)
        for i in self.train_ids + self.val_ids:
            if i not in self.labels:
                raise ValueError(f"labeled node {i} has no label")
        for node, c in self.labels.items():
            if not 0 <= c < self.n_classes:
                raise ValueError(f"label {c} of node {node} outside [0, {self.n_classes})")

    def check_nodes(self, n_nodes):
        ids = self.train_ids + self.val_ids + self.test_ids
        if ids and (min(ids) < 0 or max(ids) >= n_nodes):
            raise ValueError(f"split references nodes outside [0, {n_nodes})")

    @property
    def has_test_labels(self):
        return bool(self.test_ids) and all(i in self.labels for i in self.test_ids)


@dataclass
class GpPosterior:
    """Posterior mean (and optionally covariance) at ``query_ids``."""

    mean: np.ndarray
    query_ids: np.ndarray
    predictive_cov: np.ndarray | None = None
    jitter: float = 0.0

    @property
    def unlabeled_ids(self):
        return self.query_ids


def encode_labels(split, ids):
    """One-hot rows for ``ids`` using ``split.labels``."""
    ids = list(ids)
    y = np.zeros((len(ids), split.n_classes))
    for r, i in enumerate(ids):
        try:
            y[r, split.labels[int(i)]] = 1.0
        except KeyError:
            raise KeyError(f"node {i} has no label") from None
    return y


def default_jitter(gamma_dd):
    d = gamma_dd.shape[0]
    return 1e-8 * float(np.trace(gamma_dd)) / d if d else 0.0


def _factor(a, noise, jitter):
    """Cholesky of ``a + (noise + jitter) I`` with x10 jitter escalation."""
    if jitter > 0:
        tries = [jitter * 10.0**k for k in range(MAX_JITTER_ESCALATIONS + 1)]
    else:
        # zero cannot be escalated multiplicatively
        base = default_jitter(a) or np.finfo(float).eps
        tries = [0.0] + [base * 10.0**k for k in range(MAX_JITTER_ESCALATIONS)]
    eye = np.eye(a.shape[0])
    for j in tries:
        try:
            c = scipy.linalg.cho_factor(a + (noise + j) * eye, lower=True, check_finite=True)
            if j != jitter:
                logger.warning("Cholesky needed jitter %.3g (requested %.3g)", j, jitter)
            return c, j
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"Cholesky factorization failed; last jitter tried was {tries[-1]:.3g}", tries[-1]
    )


def posterior(
    gamma,
    observed_ids,
    y_observed,
    sigma_tau_sq=0.01,
    jitter=None,
    want_cov=False,
    query_ids=None,
):
    """GP conditional at ``query_ids`` given noisy targets at ``observed_ids``.

    ``mean = G_QD (G_DD + (sigma_tau_sq + jitter) I)^{-1} Y_D`` computed with a
    Cholesky factorization. ``query_ids`` defaults to every node not observed.
    ``jitter=None`` selects :func:`default_jitter`.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    n = gamma.shape[0]
    if gamma.ndim != 2 or gamma.shape[1] != n:
        raise ShapeError(f"kernel must be square, got {gamma.shape}")
    obs = np.asarray(observed_ids, dtype=np.int64)
    if len(np.unique(obs)) != len(obs):
        raise ValueError("observed ids must be distinct")
    y = np.asarray(y_observed, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != len(obs):
        raise ShapeError(f"{len(obs)} observed ids but {y.shape[0]} target rows")
    if sigma_tau_sq < 0:
        raise ValueError("sigma_tau_sq must be >= 0")
    if query_ids is None:
        mask = np.ones(n, dtype=bool)
        mask[obs] = False
        query = np.flatnonzero(mask)
    else:
        query = np.asarray(query_ids, dtype=np.int64)

    g_dd = gamma[np.ix_(obs, obs)]
    g_qd = gamma[np.ix_(query, obs)]
    if jitter is None:
        jitter = default_jitter(g_dd)
    factor, used = _factor(g_dd, sigma_tau_sq, jitter)

    mean = g_qd @ scipy.linalg.cho_solve(factor, y)
    cov = None
    if want_cov:
        lower = np.tril(factor[0])
        v = scipy.linalg.solve_triangular(lower, g_qd.T, lower=True)
        cov = gamma[np.ix_(query, query)] - v.T @ v
        cov = 0.5 * (cov + cov.T)
    return GpPosterior(mean=mean, query_ids=query, predictive_cov=cov, jitter=used)


def classify(post):
    """Row argmax of the posterior mean; ties go to the lowest class."""
    pred = np.argmax(post.mean, axis=1)
    return {int(i): int(c) for i, c in zip(post.query_ids, pred)}
