"""Local NSA built on maximum-likelihood local intrinsic dimensionality.

Everything here works with inverse LIDs, ``-(1/k) sum_j log(d_j / d_k)`` over
an ordered neighbor tuple whose last element is the reference neighbor.  The
natural logarithm is used throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import as_cloud, check_paired
from .errors import DegenerateNeighborhood, InvalidInput, NumericalError, ShapeError

EPS_DIST = 1e-12
LID_MAX = 1e6


@dataclass
class NeighborList:
    k: int
    indices: np.ndarray
    distances: np.ndarray


@dataclass
class LnsaReport:
    directed_xy: float
    directed_yx: float
    metric: float
    per_point_xy: np.ndarray
    per_point_yx: np.ndarray


def _check_k(k: int, n: int):
    if not 1 <= k < n:
        raise InvalidInput(f"k must satisfy 1 <= k < N = {n}, got {k}")


def knn_from_distances(dist: np.ndarray, k: int) -> NeighborList:
    """Exact kNN from a distance matrix; self excluded, ties by ascending index."""
    n = dist.shape[0]
    _check_k(k, n)
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    order = np.argsort(masked, axis=1, kind="stable")[:, :k]
    return NeighborList(k, order, np.take_along_axis(dist, order, axis=1))


def knn(cloud, k: int) -> NeighborList:
    cloud = as_cloud(cloud)
    return knn_from_distances(kernels.pairwise_distances(cloud), k)


def _inverse_from_tuple_distances(d: np.ndarray, eps_dist: float) -> np.ndarray:
    """Inverse AD for each row of ``d`` (shape ``(N, k)``), last column = reference."""
    ref = d[:, -1]
    bad = np.flatnonzero(ref <= eps_dist)
    if bad.size:
        raise DegenerateNeighborhood(
            f"point {bad[0]} has its reference neighbor at distance {ref[bad[0]]:g} <= {eps_dist:g}"
        )
    floored = np.maximum(d, eps_dist)
    return -np.log(floored / floored[:, -1:]).mean(axis=1)


def ad_inverse_rows(dist: np.ndarray, indices: np.ndarray, eps_dist: float = EPS_DIST) -> np.ndarray:
    """Inverse approximate dimensionality of every point over ``indices`` tuples."""
    d = np.take_along_axis(dist, indices, axis=1)
    return _inverse_from_tuple_distances(d, eps_dist)


def inverse_lids_from_distances(dist: np.ndarray, k: int, eps_dist: float = EPS_DIST):
    """Return ``(neighbors, inverse_lids)`` with neighborhoods chosen in ``dist``."""
    nl = knn_from_distances(dist, k)
    return nl, _inverse_from_tuple_distances(nl.distances, eps_dist)


def ad_inverse(i: int, tuple_indices, cloud, eps_dist: float = EPS_DIST) -> float:
    """Inverse approximate dimensionality of point ``i`` over an ordered tuple.

    Can be negative when the last tuple element is not the farthest one.
    """
    cloud = as_cloud(cloud)
    idx = np.asarray(tuple_indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise InvalidInput("tuple must be a non-empty 1-D index list")
    if np.any(idx == i % cloud.shape[0]):
        raise InvalidInput("tuple must not contain the point itself")
    row = kernels.pairwise_distances(cloud)[i]
    return float(_inverse_from_tuple_distances(row[idx][None, :], eps_dist)[0])


def clamp_reciprocal(inverse: float, lid_max: float = LID_MAX) -> float:
    if inverse <= 1.0 / lid_max:
        return float(lid_max)
    return float(1.0 / inverse)


def lid(i: int, cloud, k: int, eps_dist: float = EPS_DIST, lid_max: float = LID_MAX) -> float:
    """Maximum-likelihood LID of point ``i``, clamped to ``lid_max``."""
    cloud = as_cloud(cloud)
    nl = knn(cloud, k)
    inv = _inverse_from_tuple_distances(nl.distances[i][None, :], eps_dist)[0]
    return clamp_reciprocal(inv, lid_max)


def intrinsic_dim(cloud, k: int, eps_dist: float = EPS_DIST, lid_max: float = LID_MAX) -> float:
    """Harmonic-mean aggregate of the per-point LIDs."""
    cloud = as_cloud(cloud)
    _, inv = inverse_lids_from_distances(kernels.pairwise_distances(cloud), k, eps_dist)
    return clamp_reciprocal(float(inv.mean()), lid_max)


def symmetric_lid_inverse(i: int, source_neighbors: NeighborList, target, eps_dist: float = EPS_DIST) -> float:
    """Inverse AD of point ``i`` in ``target`` over the neighbors chosen in another cloud."""
    target = as_cloud(target)
    if source_neighbors.indices.shape[0] != target.shape[0]:
        raise ShapeError("neighbor list and target cloud disagree on N")
    return ad_inverse(i, source_neighbors.indices[i], target, eps_dist)


def directed_from_distances(dist_x, dist_y, k: int, eps_dist: float = EPS_DIST):
    """LNSA of X w.r.t. Y from distance matrices; neighborhoods are chosen in Y."""
    nl, inv_y = inverse_lids_from_distances(dist_y, k, eps_dist)
    inv_x = ad_inverse_rows(dist_x, nl.indices, eps_dist)
    per_point = (inv_y - inv_x) ** 2
    return float(per_point.mean()), per_point


def lnsa_directed(x, y, k: int = 5, eps_dist: float = EPS_DIST):
    """``LNSA_Y(X)``: note the neighborhoods are selected in the *second* cloud.

    Returns ``(value, per_point)``.
    """
    x, y = check_paired(x, y)
    _check_k(k, x.shape[0])
    return directed_from_distances(
        kernels.pairwise_distances(x), kernels.pairwise_distances(y), k, eps_dist
    )


def lnsa_metric(x, y, k: int = 5, eps_dist: float = EPS_DIST) -> LnsaReport:
    """Symmetrized LNSA (a premetric); both directed parts are reported."""
    x, y = check_paired(x, y)
    _check_k(k, x.shape[0])
    dx = kernels.pairwise_distances(x)
    dy = kernels.pairwise_distances(y)
    xy, per_xy = directed_from_distances(dx, dy, k, eps_dist)
    yx, per_yx = directed_from_distances(dy, dx, k, eps_dist)
    return LnsaReport(xy, yx, xy + yx, per_xy, per_yx)


def lnsa_grad_from_reference(neighbors: NeighborList, inv_ref: np.ndarray, z: np.ndarray,
                             dist_z: np.ndarray | None = None, eps_dist: float = EPS_DIST):
    """Value and gradient of ``LNSA_ref(z)`` for fixed reference neighborhoods.

    ``inv_ref`` holds the reference inverse LIDs.  Each point ``j`` contributes
    ``(inv_ref[j] - b_j)^2 / N`` with ``b_j = -(1/k) sum_l log(d_jl / d_jk)``
    measured in ``z``; ``b_j`` depends on ``z_j`` and on its tuple members, and
    the reference (last) member enters with weight ``(k - 1) / k``.
    """
    n, dim = z.shape
    k = neighbors.k
    if dist_z is None:
        dist_z = kernels.pairwise_distances(z)
    idx = neighbors.indices
    d = np.take_along_axis(dist_z, idx, axis=1)
    inv_z = _inverse_from_tuple_distances(d, eps_dist)
    resid = inv_ref - inv_z
    value = float((resid ** 2).mean())

    # d/d b_j of the mean squared residual
    coef_b = -2.0 * resid / n
    w = np.full(k, -1.0 / k)
    w[-1] = (k - 1.0) / k
    coef = coef_b[:, None] * w[None, :]
    # floored distances are constant, so they carry no derivative
    coef = np.where(d > eps_dist, coef, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_sq = np.where(d > eps_dist, 1.0 / (d * d), 0.0)
    diff = z[:, None, :] - z[idx]                      # (N, k, dim)
    contrib = (coef * inv_sq)[:, :, None] * diff       # d b-term / d z_j
    grad = contrib.sum(axis=1)
    np.add.at(grad, idx.ravel(), -contrib.reshape(-1, dim))
    if not np.all(np.isfinite(grad)):
        raise NumericalError("LNSA gradient is not finite")
    return value, grad


def lnsa_grad(x, z, k: int = 5, eps_dist: float = EPS_DIST) -> np.ndarray:
    """Gradient of ``LNSA_X(Z)`` w.r.t. ``Z`` (neighborhoods fixed in ``X``)."""
    x, z = check_paired(x, z, ("X", "Z"))
    _check_k(k, x.shape[0])
    nl, inv_x = inverse_lids_from_distances(kernels.pairwise_distances(x), k, eps_dist)
    return lnsa_grad_from_reference(nl, inv_x, z, eps_dist=eps_dist)[1]
