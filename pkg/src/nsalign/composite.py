"""Weighted NSA loss, its gradient, the minibatch GNSA estimator and a gradient checker."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cloud import (
    EPS_NORM,
    ORIGIN,
    QUANTILE,
    NormalizationPolicy,
    check_paired,
    compute_normalizer,
    normalizer_anchor,
    rng_from_seed,
)
from .errors import InvalidInput
from .gnsa import EPS_DIST, gnsa, gnsa_grad, gnsa_grad_from_reference, pointwise_from_distances
from .lnsa import LID_MAX, inverse_lids_from_distances, lnsa_directed, lnsa_grad, lnsa_grad_from_reference


@dataclass(frozen=True)
class NsaConfig:
    """Weights and numerical settings shared by the loss-side operations."""

    l: float = 1.0
    g: float = 1.0
    k: int = 5
    policy: NormalizationPolicy = field(default_factory=NormalizationPolicy)
    seed: int = 0
    eps_dist: float = EPS_DIST
    eps_norm: float = EPS_NORM
    lid_max: float = LID_MAX

    def __post_init__(self):
        if self.l < 0 or self.g < 0 or not self.l + self.g > 0:
            raise InvalidInput(f"weights must be non-negative with l + g > 0 (l={self.l}, g={self.g})")
        if self.k < 1:
            raise InvalidInput(f"k must be positive, got {self.k}")
        if not (self.eps_dist > 0 and self.eps_norm > 0 and self.lid_max > 0):
            raise InvalidInput("epsilon floors and lid_max must be positive")

    def to_dict(self):
        return {
            "l": self.l, "g": self.g, "k": self.k,
            "norm": self.policy.describe(), "radius_scale": self.policy.radius_scale,
            "seed": self.seed, "eps_dist": self.eps_dist, "eps_norm": self.eps_norm,
            "lid_max": self.lid_max,
        }


DEFAULT_CONFIG = NsaConfig()


def nsa_loss(x, z, cfg: NsaConfig = DEFAULT_CONFIG) -> float:
    """``g * GNSA(X, Z) + l * LNSA_X(Z)`` with neighborhoods taken in the reference ``X``."""
    x, z = check_paired(x, z, ("X", "Z"))
    value = 0.0
    if cfg.g:
        value += cfg.g * gnsa(x, z, cfg.policy, cfg.eps_norm).total
    if cfg.l:
        value += cfg.l * lnsa_directed(z, x, cfg.k, cfg.eps_dist)[0]
    return value


def nsa_grad(x, z, cfg: NsaConfig = DEFAULT_CONFIG) -> np.ndarray:
    x, z = check_paired(x, z, ("X", "Z"))
    grad = np.zeros_like(z)
    if cfg.g:
        grad = cfg.g * gnsa_grad(x, z, cfg.policy, "Y", cfg.eps_dist, cfg.eps_norm)
    if cfg.l:
        grad = grad + cfg.l * lnsa_grad(x, z, cfg.k, cfg.eps_dist)
    return grad


# -- minibatch estimator -------------------------------------------------------

@dataclass
class SubsetEstimate:
    trials: int
    batch_size: int
    per_trial: np.ndarray
    mean: float
    full_value: float
    rel_error: float
    per_batch_norm: bool = False

    def to_dict(self):
        return {
            "trials": self.trials,
            "batch_size": self.batch_size,
            "per_batch_norm": self.per_batch_norm,
            "mean": self.mean,
            "full_value": self.full_value,
            "rel_error": self.rel_error,
            "per_trial": [float(v) for v in self.per_trial],
        }


def subset_estimate(x, y, batch_size: int, trials: int, cfg: NsaConfig = DEFAULT_CONFIG,
                    per_batch_norm: bool = False, eps: float = 1e-12) -> SubsetEstimate:
    """Monte-Carlo average of GNSA over random paired subsets.

    Each trial draws ``batch_size`` row indices uniformly without replacement
    (generator seeded with ``cfg.seed + trial``) and evaluates GNSA on the
    aligned sub-clouds.  By default the normalizers of the *full* clouds are
    kept fixed, which makes the average track the full GNSA.  Diagonal terms
    are zero, so sampling without replacement has expectation
    ``full * N (s - 1) / (s (N - 1))``; the gap shrinks as ``s`` grows.
    ``per_batch_norm=True`` recomputes the normalizers inside every batch,
    which is biased.
    """
    x, y = check_paired(x, y)
    n = x.shape[0]
    if not 2 <= batch_size <= n:
        raise InvalidInput(f"batch_size must satisfy 2 <= s <= N = {n}, got {batch_size}")
    if trials < 1:
        raise InvalidInput(f"trials must be >= 1, got {trials}")
    nx = compute_normalizer(x, cfg.policy, cfg.eps_norm)
    ny = compute_normalizer(y, cfg.policy, cfg.eps_norm)
    dx = kernels.pairwise_distances(x)
    dy = kernels.pairwise_distances(y)
    full = float(pointwise_from_distances(dx, dy, nx, ny).mean())

    per_trial = np.empty(trials)
    for t in range(trials):
        rng = rng_from_seed(cfg.seed + t)
        idx = np.sort(rng.choice(n, size=batch_size, replace=False))
        bx, by = nx, ny
        if per_batch_norm:
            bx = compute_normalizer(x[idx], cfg.policy, cfg.eps_norm)
            by = compute_normalizer(y[idx], cfg.policy, cfg.eps_norm)
        sub = np.ix_(idx, idx)
        per_trial[t] = pointwise_from_distances(dx[sub], dy[sub], bx, by).mean()
    mean = float(per_trial.mean())
    return SubsetEstimate(trials, batch_size, per_trial, mean, full,
                          abs(mean - full) / max(full, eps), per_batch_norm)


# -- gradient check ------------------------------------------------------------

@dataclass
class GradCheckReport:
    loss: str
    max_abs_err: float
    max_rel_err: float
    argmax: tuple
    n_checked: int
    n_skipped: int
    max_abs_analytic: float
    max_abs_numeric: float
    h: float

    def to_dict(self):
        return {
            "loss": self.loss,
            "max_abs_err": self.max_abs_err,
            "max_rel_err": self.max_rel_err,
            "argmax": list(self.argmax),
            "n_checked": self.n_checked,
            "n_skipped": self.n_skipped,
            "max_abs_analytic": self.max_abs_analytic,
            "max_abs_numeric": self.max_abs_numeric,
            "h": self.h,
        }


class _FrozenLoss:
    """NSA loss of Z with reference neighborhoods and the Z-normalizer anchor frozen."""

    def __init__(self, x, z0, cfg: NsaConfig, use_g: bool, use_l: bool):
        self.cfg = cfg
        self.policy = cfg.policy
        self.use_g = use_g and cfg.g > 0
        self.use_l = use_l and cfg.l > 0
        dist_x = kernels.pairwise_distances(x)
        self.ref = dist_x / compute_normalizer(x, cfg.policy, cfg.eps_norm)
        self.nz0, self.anchor = normalizer_anchor(z0, cfg.policy)
        self.neighbors, self.inv_x = inverse_lids_from_distances(dist_x, cfg.k, cfg.eps_dist)

    def normalizer(self, z):
        if self.policy.mode == QUANTILE:
            return self.nz0
        v = z[self.anchor]
        if self.policy.mode != ORIGIN:
            v = v - z.mean(axis=0)
        # row-wise norm, so the value rounds exactly as normalizer_anchor does
        return self.policy.radius_scale * float(np.linalg.norm(v[None, :], axis=1)[0])

    def __call__(self, z):
        """Return ``(value, sign pattern of the |.| arguments or None)``."""
        value, signs = 0.0, None
        if self.use_g:
            diff = kernels.pairwise_distances(z) / self.normalizer(z) - self.ref
            signs = np.sign(diff)
            value += self.cfg.g * float(np.abs(diff).mean(axis=1).mean())
        if self.use_l:
            value += self.cfg.l * lnsa_grad_from_reference(self.neighbors, self.inv_x, z,
                                                           eps_dist=self.cfg.eps_dist)[0]
        return value, signs

    def gradient(self, z):
        grad = np.zeros_like(z)
        if self.use_g:
            grad += self.cfg.g * gnsa_grad_from_reference(
                self.ref, z, self.policy, self.normalizer(z), self.anchor,
                eps_dist=self.cfg.eps_dist, eps_norm=self.cfg.eps_norm)
        if self.use_l:
            grad += self.cfg.l * lnsa_grad_from_reference(self.neighbors, self.inv_x, z,
                                                          eps_dist=self.cfg.eps_dist)[1]
        return grad


LOSS_IDS = ("GNSA", "LNSA", "NSA")


def grad_check(loss_id: str, x, z, cfg: NsaConfig = DEFAULT_CONFIG, h: float = 1e-5,
               rel_floor: float = 1e-6) -> GradCheckReport:
    """Compare the analytic gradient with central differences, coordinate by coordinate.

    Neighbor tuples and the farthest-point index of ``z`` stay frozen across
    the two evaluations.  Coordinates whose ``+h``/``-h`` evaluations straddle a
    kink of the absolute value (the sign pattern changes) are skipped, since a
    difference quotient across a kink estimates no derivative.  The relative
    error of a coordinate is ``|a - n| / max(|a|, |n|, rel_floor * max|n|)``.
    """
    loss_id = loss_id.upper()
    if loss_id not in LOSS_IDS:
        raise InvalidInput(f"loss must be one of {LOSS_IDS}, got {loss_id!r}")
    if not h > 0:
        raise InvalidInput("h must be positive")
    x, z = check_paired(x, z, ("X", "Z"))
    loss = _FrozenLoss(x, z, cfg, use_g=loss_id != "LNSA", use_l=loss_id != "GNSA")
    analytic = loss.gradient(z)
    numeric = np.zeros_like(z)
    skipped = np.zeros(z.shape, dtype=bool)
    zp = z.copy()
    for i in range(z.shape[0]):
        for c in range(z.shape[1]):
            zp[i, c] = z[i, c] + h
            fp, sp = loss(zp)
            zp[i, c] = z[i, c] - h
            fm, sm = loss(zp)
            zp[i, c] = z[i, c]
            numeric[i, c] = (fp - fm) / (2.0 * h)
            if sp is not None and not np.array_equal(sp, sm):
                skipped[i, c] = True

    abs_err = np.abs(analytic - numeric)
    floor = rel_floor * float(np.abs(numeric).max())
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(denom > 0, abs_err / np.where(denom > 0, denom, 1.0), 0.0)
    rel[skipped] = 0.0
    checked_abs = np.where(skipped, 0.0, abs_err)
    flat = int(np.argmax(rel))
    return GradCheckReport(
        loss=loss_id,
        max_abs_err=float(checked_abs.max()),
        max_rel_err=float(rel.max()),
        argmax=tuple(int(v) for v in np.unravel_index(flat, z.shape)),
        n_checked=int((~skipped).sum()),
        n_skipped=int(skipped.sum()),
        max_abs_analytic=float(np.abs(analytic).max()),
        max_abs_numeric=float(np.abs(numeric).max()),
        h=h,
    )
