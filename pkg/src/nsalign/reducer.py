"""Dimensionality reduction by direct minimisation of the NSA loss.

There is no encoder network: the latent coordinates themselves are the
parameters, updated with minibatch gradients and an adaptive-moment step.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from . import kernels
from .cloud import (
    CENTERED,
    NormalizationPolicy,
    as_cloud,
    compute_normalizer,
    normalizer_anchor,
    principal_axes,
    rng_from_seed,
)
from .composite import NsaConfig
from .errors import DivergedError, InvalidInput
from .gnsa import gnsa_grad_from_reference, pointwise_from_distances
from .lnsa import (
    directed_from_distances,
    inverse_lids_from_distances,
    knn_from_distances,
    lnsa_grad_from_reference,
)

INIT_PCA = "pca"
INIT_GAUSS = "gauss"


def geodesic_distances(cloud, k_graph: int = 10) -> np.ndarray:
    """Shortest-path distances through the symmetrised kNN graph.

    Disconnected components are joined by repeatedly adding the single
    shortest edge between two different components.
    """
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if k_graph < 1:
        raise InvalidInput(f"k_graph must be >= 1, got {k_graph}")
    dist = kernels.pairwise_distances(cloud)
    nl = knn_from_distances(dist, min(k_graph, n - 1))
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), nl.k), nl.indices.ravel()] = True
    adj |= adj.T

    n_comp, labels = connected_components(csr_matrix(adj), directed=False)
    while n_comp > 1:
        cross = labels[:, None] != labels[None, :]
        i, j = np.unravel_index(np.argmin(np.where(cross, dist, np.inf)), dist.shape)
        adj[i, j] = adj[j, i] = True
        labels[labels == labels[j]] = labels[i]
        n_comp -= 1

    rows, cols = np.nonzero(adj)
    # csgraph drops zero-weight entries; keep coincident points connected
    weights = np.maximum(dist[rows, cols], np.finfo(float).tiny)
    graph = csr_matrix((weights, (rows, cols)), shape=(n, n))
    return shortest_path(graph, method="D", directed=False)


class Adam:
    """Adaptive-moment update for a single parameter array."""

    def __init__(self, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, param: np.ndarray, grad: np.ndarray) -> None:
        if self.m is None:
            self.m = np.zeros_like(param)
            self.v = np.zeros_like(param)
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (grad * grad)
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class ReducerConfig:
    """Settings for :func:`reduce`.

    ``geodesic_k`` switches the reference distances to graph geodesics.
    ``batch_normalizer="global"`` normalizes each batch of the latent cloud by
    the normalizer of the whole current latent cloud; ``"batch"`` uses the
    batch's own normalizer.

    Near an exact fit the subgradient signs are rounding noise and the
    adaptive step would turn them into full-size moves.  Two dead zones guard
    against this: normalized distances within ``tie_tol`` of the reference
    count as ties, and a batch whose gradient never exceeds ``grad_tol`` in
    absolute value leaves the cloud and the moments untouched.
    """

    latent_dim: int = 2
    epochs: int = 250
    batch_size: int = 256
    step_size: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    init: str = INIT_PCA
    init_scale: float = 1.0
    geodesic_k: int | None = None
    batch_normalizer: str = "global"
    lr_schedule: str = "constant"
    tie_tol: float = 1e-9
    grad_tol: float = 1e-8
    nsa: NsaConfig = field(default_factory=NsaConfig)

    def __post_init__(self):
        if self.latent_dim < 1 or self.epochs < 1 or self.batch_size < 2:
            raise InvalidInput("latent_dim and epochs must be >= 1, batch_size >= 2")
        if not self.step_size > 0:
            raise InvalidInput("step_size must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidInput("moment decays must lie in [0, 1)")
        if self.init not in (INIT_PCA, INIT_GAUSS):
            raise InvalidInput(f"init must be {INIT_PCA!r} or {INIT_GAUSS!r}")
        if self.batch_normalizer not in ("global", "batch"):
            raise InvalidInput("batch_normalizer must be 'global' or 'batch'")
        if self.lr_schedule not in ("constant", "cosine"):
            raise InvalidInput("lr_schedule must be 'constant' or 'cosine'")
        if self.tie_tol < 0 or self.grad_tol < 0:
            raise InvalidInput("tie_tol and grad_tol must be >= 0")
        if self.geodesic_k is not None and self.geodesic_k < 1:
            raise InvalidInput("geodesic_k must be >= 1")

    def to_dict(self):
        return {
            "latent_dim": self.latent_dim, "epochs": self.epochs, "batch_size": self.batch_size,
            "step_size": self.step_size, "beta1": self.beta1, "beta2": self.beta2,
            "adam_eps": self.adam_eps, "init": self.init, "init_scale": self.init_scale,
            "geodesic_k": self.geodesic_k, "batch_normalizer": self.batch_normalizer,
            "lr_schedule": self.lr_schedule, "tie_tol": self.tie_tol,
            "grad_tol": self.grad_tol,
            "nsa": self.nsa.to_dict(),
        }


@dataclass
class TrainTrace:
    loss: list
    gnsa: list
    lnsa: list
    seconds: list
    z: np.ndarray
    initial_loss: float
    initial_gnsa: float
    initial_lnsa: float


def principal_projection(x, latent_dim: int, policy: NormalizationPolicy = NormalizationPolicy()) -> np.ndarray:
    """Project onto the top principal axes, placed so the normalizer matches ``x``.

    The coordinates along the axes are taken without centering and the result
    is shifted along the first axis until its normalizer equals that of
    ``x``.  For a cloud lying in a ``latent_dim``-dimensional affine subspace
    this reproduces the normalized distances exactly.
    """
    x = as_cloud(x)
    if latent_dim > x.shape[1]:
        raise InvalidInput(f"latent_dim {latent_dim} exceeds input dimension {x.shape[1]}")
    _, evecs = principal_axes(x)
    axes = evecs[:, ::-1][:, :latent_dim]
    if policy.mode == CENTERED:
        return (x - x.mean(axis=0)) @ axes
    proj = x @ axes
    target = compute_normalizer(x, policy)

    def excess(c):
        shifted = proj.copy()
        shifted[:, 0] += c
        return normalizer_anchor(shifted, policy)[0] - target

    if excess(0.0) < 0:
        lo, hi = 0.0, target / policy.radius_scale + float(np.linalg.norm(proj, axis=1).max())
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 4 * np.finfo(float).eps * hi:
                break
        proj[:, 0] += hi
    return proj


def _initial_latent(x, cfg: ReducerConfig, rng) -> np.ndarray:
    if cfg.init == INIT_PCA:
        z = principal_projection(x, cfg.latent_dim, cfg.nsa.policy)
        # the loss is scale invariant; unit scale makes step_size meaningful
        return z / (compute_normalizer(z, cfg.nsa.policy) / cfg.nsa.policy.radius_scale)
    return cfg.init_scale * rng.standard_normal((x.shape[0], cfg.latent_dim))


class _Reference:
    """Fixed reference side: distances, normalizer and full-data neighborhoods."""

    def __init__(self, x, cfg: ReducerConfig):
        nsa = cfg.nsa
        if cfg.geodesic_k is not None:
            self.dist = geodesic_distances(x, cfg.geodesic_k)
            # no coordinates to take an origin distance from: scale by the diameter
            self.norm = nsa.policy.radius_scale * float(self.dist.max())
        else:
            self.dist = kernels.pairwise_distances(x)
            self.norm = compute_normalizer(x, nsa.policy, nsa.eps_norm)
        self.scaled = self.dist / self.norm
        self.k = min(nsa.k, x.shape[0] - 1)

    def full_loss(self, z, nsa: NsaConfig):
        dist_z = kernels.pairwise_distances(z)
        g = float(pointwise_from_distances(self.scaled, dist_z, 1.0,
                                           compute_normalizer(z, nsa.policy, nsa.eps_norm)).mean())
        l = directed_from_distances(dist_z, self.dist, self.k, nsa.eps_dist)[0] if nsa.l else 0.0
        return nsa.g * g + nsa.l * l, g, l


def _batch_gradient(ref: _Reference, z: np.ndarray, rows: np.ndarray, cfg: ReducerConfig) -> np.ndarray:
    nsa = cfg.nsa
    zb = z[rows]
    sub = np.ix_(rows, rows)
    grad = np.zeros_like(z)
    if nsa.g:
        if cfg.batch_normalizer == "global":
            grad += nsa.g * gnsa_grad_from_reference(
                ref.scaled[sub], zb, nsa.policy, full_z=z, rows=rows,
                eps_dist=nsa.eps_dist, eps_norm=nsa.eps_norm, tie_tol=cfg.tie_tol)
        else:
            grad[rows] += nsa.g * gnsa_grad_from_reference(
                ref.scaled[sub], zb, nsa.policy, eps_dist=nsa.eps_dist, eps_norm=nsa.eps_norm,
                tie_tol=cfg.tie_tol)
    if nsa.l:
        k_batch = min(nsa.k, rows.size - 1)
        nl, inv_ref = inverse_lids_from_distances(ref.dist[sub], k_batch, nsa.eps_dist)
        grad[rows] += nsa.l * lnsa_grad_from_reference(nl, inv_ref, zb, eps_dist=nsa.eps_dist)[1]
    return grad


def reduce(x, cfg: ReducerConfig = ReducerConfig(), callback=None) -> TrainTrace:
    """Optimise a ``latent_dim``-dimensional cloud to minimise NSA against ``x``.

    Each epoch visits the points in a fresh random order, split into
    near-equal batches of at most ``batch_size`` points.  The full-data loss
    is recorded after every epoch.  Deterministic for a fixed ``nsa.seed``.
    """
    x = as_cloud(x, "X")
    n, dim = x.shape
    if cfg.latent_dim > dim:
        raise InvalidInput(f"latent_dim {cfg.latent_dim} exceeds input dimension {dim}")
    rng = rng_from_seed(cfg.nsa.seed)
    ref = _Reference(x, cfg)
    z = _initial_latent(x, cfg, rng)
    opt = Adam(cfg.step_size, cfg.beta1, cfg.beta2, cfg.adam_eps)
    n_batches = max(1, -(-n // min(cfg.batch_size, n)))

    init_loss, init_g, init_l = ref.full_loss(z, cfg.nsa)
    trace = TrainTrace([], [], [], [], z, init_loss, init_g, init_l)
    for epoch in range(cfg.epochs):
        start = time.perf_counter()
        if cfg.lr_schedule == "cosine":
            opt.lr = 0.5 * cfg.step_size * (1.0 + np.cos(np.pi * epoch / cfg.epochs))
        for rows in np.array_split(rng.permutation(n), n_batches):
            grad = _batch_gradient(ref, z, np.sort(rows), cfg)
            if np.abs(grad).max() > cfg.grad_tol:
                opt.step(z, grad)
        loss, g, l = ref.full_loss(z, cfg.nsa) if np.all(np.isfinite(z)) else (np.nan,) * 3
        if not np.isfinite(loss):
            raise DivergedError(epoch, loss)
        trace.loss.append(loss)
        trace.gnsa.append(g)
        trace.lnsa.append(l)
        trace.seconds.append(time.perf_counter() - start)
        if callback is not None:
            callback(epoch, loss)
    trace.z = z
    return trace
