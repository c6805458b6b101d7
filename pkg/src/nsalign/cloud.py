"""Point clouds: validation, distances, normalization and synthetic data.

A point cloud is an ``(N, D)`` float64 array whose rows are instances.  Two
clouds are compared row by row, so row order is the correspondence key.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateCloud, InvalidInput, ShapeError

EPS_NORM = 1e-12

ORIGIN = "origin"
CENTERED = "centered"
QUANTILE = "quantile"

LEAST_VARIANCE_FIRST = "least"
MOST_VARIANCE_FIRST = "most"


def as_cloud(data, name: str = "cloud") -> np.ndarray:
    """Validate ``data`` as a point cloud and return it as C-ordered float64."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D (N, D), got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 1:
        raise ShapeError(f"{name} needs N >= 2 and D >= 1, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number) or np.iscomplexobj(arr):
        raise InvalidInput(f"{name} must hold real numbers, got dtype {arr.dtype}")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        row, col = np.argwhere(~np.isfinite(arr))[0]
        raise InvalidInput(f"{name} has a non-finite entry at row {row}, column {col}")
    return arr


def check_paired(x, y, names=("X", "Y")):
    x = as_cloud(x, names[0])
    y = as_cloud(y, names[1])
    if x.shape[0] != y.shape[0]:
        raise ShapeError(
            f"{names[0]} and {names[1]} must have the same number of points "
            f"({x.shape[0]} != {y.shape[0]})"
        )
    return x, y


@dataclass(frozen=True)
class NormalizationPolicy:
    """How the scale divisor of a cloud is computed.

    ``mode`` is one of ``"origin"`` (largest distance from the origin),
    ``"centered"`` (same, after subtracting the centroid) or ``"quantile"``
    (the ``q``-quantile of the distances from the origin).  The result is
    multiplied by ``radius_scale``; ``radius_scale=2`` gives the "twice the
    farthest point" convention.
    """

    mode: str = ORIGIN
    q: float = 0.98
    radius_scale: float = 1.0

    def __post_init__(self):
        if self.mode not in (ORIGIN, CENTERED, QUANTILE):
            raise InvalidInput(f"unknown normalization mode {self.mode!r}")
        if self.mode == QUANTILE and not 0.0 < self.q <= 1.0:
            raise InvalidInput(f"quantile must lie in (0, 1], got {self.q}")
        if not self.radius_scale > 0.0:
            raise InvalidInput(f"radius_scale must be positive, got {self.radius_scale}")

    @classmethod
    def parse(cls, text: str, radius_scale: float = 1.0) -> "NormalizationPolicy":
        """Parse ``origin``, ``centered`` or ``quantile=0.98``."""
        text = text.strip().lower()
        if text.startswith(QUANTILE):
            _, _, q = text.partition("=")
            return cls(QUANTILE, float(q) if q else 0.98, radius_scale)
        return cls(text, radius_scale=radius_scale)

    def describe(self) -> str:
        if self.mode == QUANTILE:
            return f"quantile={self.q:g}"
        return self.mode


DEFAULT_POLICY = NormalizationPolicy()


def pairwise_distances(cloud) -> np.ndarray:
    """Euclidean distance matrix; exactly symmetric with a zero diagonal."""
    return kernels.pairwise_distances(as_cloud(cloud))


def normalizer_anchor(cloud: np.ndarray, policy: NormalizationPolicy):
    """Return ``(value, index)`` where ``index`` is the argmax point (or None)."""
    if policy.mode == CENTERED:
        radii = np.linalg.norm(cloud - cloud.mean(axis=0), axis=1)
    else:
        radii = np.linalg.norm(cloud, axis=1)
    if policy.mode == QUANTILE:
        value = float(np.quantile(radii, policy.q))
        index = None
    else:
        index = int(np.argmax(radii))
        value = float(radii[index])
    return policy.radius_scale * value, index


def compute_normalizer(cloud, policy: NormalizationPolicy = DEFAULT_POLICY,
                       eps_norm: float = EPS_NORM) -> float:
    """Scale divisor of ``cloud`` under ``policy``.

    Raises DegenerateCloud when the value does not exceed ``eps_norm``.
    """
    value, _ = normalizer_anchor(as_cloud(cloud), policy)
    if not value > eps_norm:
        raise DegenerateCloud(
            f"normalizer {value:g} <= {eps_norm:g}; all points coincide with the "
            f"{'centroid' if policy.mode == CENTERED else 'origin'}"
        )
    return value


def center(cloud) -> np.ndarray:
    cloud = as_cloud(cloud)
    return cloud - cloud.mean(axis=0)


def principal_axes(cloud: np.ndarray):
    """Eigen-decomposition of the covariance, eigenvalues ascending."""
    centered = cloud - cloud.mean(axis=0)
    cov = centered.T @ centered / cloud.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    return evals, evecs


def remove_principal_components(cloud, m: int, order: str = LEAST_VARIANCE_FIRST) -> np.ndarray:
    """Zero the projections onto ``m`` principal components and reconstruct.

    ``order="least"`` removes the lowest-variance components first, ``"most"``
    the highest-variance ones.  The centroid is preserved.
    """
    cloud = as_cloud(cloud)
    n, dim = cloud.shape
    if not 0 <= m < min(n, dim):
        raise InvalidInput(f"m must satisfy 0 <= m < min(N, D) = {min(n, dim)}, got {m}")
    if order not in (LEAST_VARIANCE_FIRST, MOST_VARIANCE_FIRST):
        raise InvalidInput(f"unknown removal order {order!r}")
    if m == 0:
        return cloud.copy()
    mean = cloud.mean(axis=0)
    centered = cloud - mean
    _, evecs = principal_axes(cloud)
    drop = evecs[:, :m] if order == LEAST_VARIANCE_FIRST else evecs[:, dim - m:]
    return centered - (centered @ drop) @ drop.T + mean


# -- synthetic data -----------------------------------------------------------

def rng_from_seed(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; every sampling routine goes through it."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def make_swiss_roll(n: int, noise: float = 0.0, seed: int = 0):
    """Swiss roll ``(t cos t, h, t sin t)``; returns ``(cloud, params)``.

    ``params`` has columns ``(t, h)`` with ``t ~ U[1.5 pi, 4.5 pi]`` and
    ``h ~ U[0, 21]``.
    """
    if n < 10:
        raise InvalidInput(f"swiss roll needs n >= 10, got {n}")
    rng = rng_from_seed(seed)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=n)
    h = rng.uniform(0.0, 21.0, size=n)
    cloud = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    if noise > 0:
        cloud = cloud + noise * rng.standard_normal(cloud.shape)
    return cloud, np.column_stack([t, h])


def blob_centers(d: int, n_clusters: int, separation: float) -> np.ndarray:
    """Cluster centers with pairwise distance ``separation``, centered at 0.

    Centers are scaled simplex vertices when ``n_clusters <= d``; otherwise they
    are spaced ``separation`` apart along the first axis.
    """
    if n_clusters <= d:
        centers = np.zeros((n_clusters, d))
        centers[np.arange(n_clusters), np.arange(n_clusters)] = separation / np.sqrt(2.0)
    else:
        centers = np.zeros((n_clusters, d))
        centers[:, 0] = separation * np.arange(n_clusters)
    return centers - centers.mean(axis=0)


def make_blobs(n: int, d: int, n_clusters: int = 3, separation: float = 10.0, seed: int = 0):
    """Isotropic unit-variance Gaussian clusters; returns ``(cloud, labels)``."""
    if not n >= n_clusters >= 1 or d < 1:
        raise InvalidInput(f"need n >= n_clusters >= 1 and d >= 1 (n={n}, k={n_clusters}, d={d})")
    rng = rng_from_seed(seed)
    labels = np.arange(n) % n_clusters
    centers = blob_centers(d, n_clusters, separation)
    cloud = centers[labels] + rng.standard_normal((n, d))
    return cloud, labels


def make_spheres(n_per_sphere: int, n_spheres: int = 10, d: int = 100, seed: int = 0,
                 n_enclosing: int | None = None, return_centers: bool = False):
    """Unit spheres with random centers inside one sphere of radius 5.

    Sphere ``s < n_spheres`` has label ``s``; the enclosing sphere, centered at
    the origin, has label ``n_spheres``.  Centers are Gaussian with standard
    deviation ``10 / sqrt(d)``.  With ``return_centers`` the ``(n_spheres + 1,
    d)`` center matrix is returned as a third element.
    """
    if d < 2:
        raise InvalidInput(f"spheres need d >= 2, got {d}")
    if n_enclosing is None:
        n_enclosing = n_per_sphere
    rng = rng_from_seed(seed)
    centers = rng.normal(0.0, 10.0 / np.sqrt(d), size=(n_spheres, d))

    def surface(count, radius):
        v = rng.standard_normal((count, d))
        return radius * v / np.linalg.norm(v, axis=1, keepdims=True)

    parts = [surface(n_per_sphere, 1.0) + c for c in centers]
    parts.append(surface(n_enclosing, 5.0))
    labels = np.concatenate(
        [np.full(n_per_sphere, s) for s in range(n_spheres)] + [np.full(n_enclosing, n_spheres)]
    )
    cloud = np.vstack(parts)
    if return_centers:
        return cloud, labels, np.vstack([centers, np.zeros((1, d))])
    return cloud, labels
