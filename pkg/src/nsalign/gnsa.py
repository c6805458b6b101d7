"""Global NSA: mean absolute discrepancy of normalized pairwise distances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import (
    CENTERED,
    DEFAULT_POLICY,
    EPS_NORM,
    ORIGIN,
    NormalizationPolicy,
    as_cloud,
    check_paired,
    compute_normalizer,
    normalizer_anchor,
)
from .errors import DegenerateCloud, InvalidInput, NumericalError

EPS_DIST = 1e-12


@dataclass
class GnsaReport:
    total: float
    pointwise: np.ndarray
    normalizer_x: float
    normalizer_y: float


def pointwise_from_distances(dist_x, dist_y, nx, ny) -> np.ndarray:
    """Row means of ``|dist_x / nx - dist_y / ny|``, diagonal terms included."""
    return np.abs(dist_x / nx - dist_y / ny).mean(axis=1)


def gnsa_pointwise(x, y, i: int, nx: float, ny: float) -> float:
    """Discrepancy of point ``i`` against all points (its own zero term included)."""
    x, y = check_paired(x, y)
    n = x.shape[0]
    if not -n <= i < n:
        raise InvalidInput(f"index {i} out of range for {n} points")
    if not (nx > 0 and ny > 0):
        raise InvalidInput("normalizers must be positive")
    dx = np.linalg.norm(x - x[i], axis=1)
    dy = np.linalg.norm(y - y[i], axis=1)
    return float(np.abs(dx / nx - dy / ny).mean())


def gnsa(x, y, policy: NormalizationPolicy = DEFAULT_POLICY, eps_norm: float = EPS_NORM) -> GnsaReport:
    """GNSA between two paired clouds, with per-point breakdown.

    ``total`` lies in ``[0, 2]`` under the origin normalizer.
    """
    x, y = check_paired(x, y)
    nx = compute_normalizer(x, policy, eps_norm)
    ny = compute_normalizer(y, policy, eps_norm)
    pointwise = pointwise_from_distances(
        kernels.pairwise_distances(x), kernels.pairwise_distances(y), nx, ny
    )
    return GnsaReport(float(pointwise.mean()), pointwise, nx, ny)


def normalizer_gradient(z: np.ndarray, policy: NormalizationPolicy, anchor) -> np.ndarray:
    """Derivative of the normalizer of ``z`` w.r.t. every coordinate.

    ``anchor`` is the index of the farthest point.  The quantile normalizer is
    treated as a constant.
    """
    grad = np.zeros_like(z)
    if anchor is None:
        return grad
    if policy.mode == ORIGIN:
        r = np.linalg.norm(z[anchor])
        if r > 0:
            grad[anchor] = policy.radius_scale * z[anchor] / r
    elif policy.mode == CENTERED:
        v = z[anchor] - z.mean(axis=0)
        r = np.linalg.norm(v)
        if r > 0:
            u = policy.radius_scale * v / r
            grad -= u / z.shape[0]
            grad[anchor] += u
    return grad


def gnsa_grad_from_reference(ref: np.ndarray, z: np.ndarray, policy: NormalizationPolicy,
                             nz: float | None = None, anchor=None, full_z: np.ndarray | None = None,
                             rows=None, eps_dist: float = EPS_DIST, eps_norm: float = EPS_NORM,
                             tie_tol: float = 0.0):
    """Subgradient of GNSA w.r.t. ``z`` against fixed normalized reference distances.

    ``ref`` is the reference distance matrix already divided by its normalizer.
    When ``nz``/``anchor`` are given they are used instead of recomputing the
    normalizer of ``z`` (this freezes the argmax point).  ``full_z`` and
    ``rows`` let the normalizer come from a larger cloud that ``z`` is a batch
    of; the returned gradient then has the shape of ``full_z``.  Pairs whose
    normalized distances differ by at most ``tie_tol`` are treated as ties.
    """
    source = z if full_z is None else full_z
    if nz is None:
        nz, anchor = normalizer_anchor(source, policy)
    if not nz > eps_norm:
        raise DegenerateCloud(f"normalizer {nz:g} <= {eps_norm:g}")
    n = z.shape[0]
    g_rows, s_rows = kernels.gnsa_rows(z, ref, nz, eps_dist, tie_tol)
    total_s = float(np.sum(s_rows))
    scale = 1.0 / (n * n)
    local = (2.0 * scale / nz) * g_rows
    norm_term = (-scale * total_s / (nz * nz)) * normalizer_gradient(source, policy, anchor)
    if full_z is None:
        grad = local + norm_term
    else:
        grad = norm_term
        grad[rows] += local
    if not np.all(np.isfinite(grad)):
        raise NumericalError("GNSA gradient is not finite")
    return grad


def gnsa_grad(x, y, policy: NormalizationPolicy = DEFAULT_POLICY, wrt: str = "Y",
              eps_dist: float = EPS_DIST, eps_norm: float = EPS_NORM,
              tie_tol: float = 0.0) -> np.ndarray:
    """Subgradient of ``gnsa(x, y).total`` w.r.t. the coordinates of ``x`` or ``y``.

    At a kink (normalized distances equal, or within ``tie_tol``) the pair
    contributes 0, and a pair of coincident points contributes no
    distance-derivative term.
    """
    x, y = check_paired(x, y)
    if wrt.upper() == "X":
        x, y = y, x
    elif wrt.upper() != "Y":
        raise InvalidInput(f"wrt must be 'X' or 'Y', got {wrt!r}")
    nx = compute_normalizer(x, policy, eps_norm)
    ref = kernels.pairwise_distances(x) / nx
    return gnsa_grad_from_reference(ref, as_cloud(y), policy, eps_dist=eps_dist, eps_norm=eps_norm,
                                    tie_tol=tie_tol)
