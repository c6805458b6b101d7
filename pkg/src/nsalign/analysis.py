"""Quality measures, layer heatmaps, sensitivity curves and pointwise reports."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import (
    DEFAULT_POLICY,
    LEAST_VARIANCE_FIRST,
    NormalizationPolicy,
    as_cloud,
    check_paired,
    compute_normalizer,
    remove_principal_components,
    rng_from_seed,
)
from .composite import DEFAULT_CONFIG, NsaConfig
from .errors import InvalidInput, ShapeError, UndefinedCorrelation
from .gnsa import gnsa, pointwise_from_distances
from .lnsa import directed_from_distances, knn_from_distances, lnsa_directed, lnsa_metric

MEASURES = ("gnsa", "lnsa", "nsa")


def _upper(dist: np.ndarray) -> np.ndarray:
    return dist[np.triu_indices(dist.shape[0], 1)]


def linear_correlation(x, z) -> float:
    """Pearson correlation of the upper-triangle pairwise distances."""
    x, z = check_paired(x, z, ("X", "Z"))
    if x.shape[0] < 3:
        raise InvalidInput("linear correlation needs N >= 3")
    a = _upper(kernels.pairwise_distances(x))
    b = _upper(kernels.pairwise_distances(z))
    a = a - a.mean()
    b = b - b.mean()
    saa = float(a @ a)
    sbb = float(b @ b)
    for s, v, name in ((saa, a, "X"), (sbb, b, "Z")):
        # relative floor: constant distances leave only rounding residue
        if s <= v.size * (1e-12 * float(np.abs(v).max())) ** 2:
            raise UndefinedCorrelation(f"pairwise distances of {name} have zero variance")
    r = float(a @ b) / np.sqrt(saa * sbb)
    return float(np.clip(r, -1.0, 1.0))


def sample_triplets(n: int, n_triplets: int, seed: int) -> np.ndarray:
    """``(n_triplets, 3)`` index triples with pairwise distinct entries."""
    if n < 3:
        raise InvalidInput("triplets need N >= 3")
    rng = rng_from_seed(seed)
    i = rng.integers(0, n, n_triplets)
    j = rng.integers(0, n - 1, n_triplets)
    j += j >= i
    m = rng.integers(0, n - 2, n_triplets)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    m += m >= lo
    m += m >= hi
    return np.column_stack([i, j, m])


def triplet_accuracy(x, z, n_triplets: int = 10000, seed: int = 0) -> float:
    """Fraction of triples ``(i, j, m)`` on which both clouds order ``d(i,j)`` vs ``d(i,m)`` alike.

    A tie agrees only with a tie.
    """
    x, z = check_paired(x, z, ("X", "Z"))
    if n_triplets < 1:
        raise InvalidInput("n_triplets must be positive")
    t = sample_triplets(x.shape[0], n_triplets, seed)

    def signs(c):
        dij = np.linalg.norm(c[t[:, 0]] - c[t[:, 1]], axis=1)
        dim = np.linalg.norm(c[t[:, 0]] - c[t[:, 2]], axis=1)
        return np.sign(dij - dim)

    return float(np.mean(signs(x) == signs(z)))


def _knn_overlap(dist_x, dist_z, k: int) -> float:
    n = dist_x.shape[0]
    ix = knn_from_distances(dist_x, k).indices
    iz = knn_from_distances(dist_z, k).indices
    member = np.zeros((n, n), dtype=bool)
    rows = np.arange(n)[:, None]
    member[rows, ix] = True
    return float(member[rows, iz].sum(axis=1).mean() / k)


def knn_consistency(x, z, k: int = 10) -> float:
    """Mean fraction of shared k-nearest-neighbor indices."""
    x, z = check_paired(x, z, ("X", "Z"))
    if not 1 <= k < x.shape[0]:
        raise InvalidInput(f"k must satisfy 1 <= k < N = {x.shape[0]}, got {k}")
    return _knn_overlap(kernels.pairwise_distances(x), kernels.pairwise_distances(z), k)


@dataclass
class QualityReport:
    linear_correlation: float
    triplet_accuracy: float
    gnsa: float
    lnsa_at_k: float
    knn_consistency: float
    k_used: int
    lnsa_loss_direction: float

    def to_dict(self):
        return dict(self.__dict__)

    def as_tuple(self):
        return (self.linear_correlation, self.triplet_accuracy, self.gnsa,
                self.lnsa_at_k, self.knn_consistency)


def quality_report(x, z, k: int = 100, n_triplets: int = 10000, seed: int = 0,
                   policy: NormalizationPolicy = DEFAULT_POLICY) -> QualityReport:
    """All five preservation measures of ``z`` as an embedding of ``x``.

    ``k`` is capped at ``N - 1``.  ``lnsa_at_k`` is the symmetric LNSA metric;
    ``lnsa_loss_direction`` is the one-sided value with neighborhoods in ``x``.
    """
    x, z = check_paired(x, z, ("X", "Z"))
    k_used = min(k, x.shape[0] - 1)
    return QualityReport(
        linear_correlation=linear_correlation(x, z),
        triplet_accuracy=triplet_accuracy(x, z, n_triplets, seed),
        gnsa=gnsa(x, z, policy).total,
        lnsa_at_k=lnsa_metric(x, z, k_used).metric,
        knn_consistency=knn_consistency(x, z, k_used),
        k_used=k_used,
        lnsa_loss_direction=lnsa_directed(z, x, k_used)[0],
    )


# -- layer comparisons ---------------------------------------------------------

class _Prepared:
    """Distances and normalizer of one cloud, computed once for many comparisons."""

    def __init__(self, cloud, policy, eps_norm):
        self.dist = kernels.pairwise_distances(cloud)
        self.norm = compute_normalizer(cloud, policy, eps_norm)


def _measure(a: _Prepared, b: _Prepared, measure: str, cfg: NsaConfig) -> float:
    value = 0.0
    if measure in ("gnsa", "nsa"):
        g = float(pointwise_from_distances(a.dist, b.dist, a.norm, b.norm).mean())
        value += g if measure == "gnsa" else cfg.g * g
    if measure in ("lnsa", "nsa"):
        k = min(cfg.k, a.dist.shape[0] - 1)
        lm = (directed_from_distances(a.dist, b.dist, k, cfg.eps_dist)[0]
              + directed_from_distances(b.dist, a.dist, k, cfg.eps_dist)[0])
        value += lm if measure == "lnsa" else cfg.l * lm
    return value


def _check_measure(measure: str) -> str:
    measure = measure.lower()
    if measure not in MEASURES:
        raise InvalidInput(f"measure must be one of {MEASURES}, got {measure!r}")
    return measure


def nsa_index(x, y, cfg: NsaConfig = DEFAULT_CONFIG) -> float:
    """Symmetric similarity index ``g * GNSA + l * LNSA-metric``."""
    x, y = check_paired(x, y)
    px, py = _Prepared(x, cfg.policy, cfg.eps_norm), _Prepared(y, cfg.policy, cfg.eps_norm)
    return _measure(px, py, "nsa", cfg)


@dataclass
class HeatmapMatrix:
    values: np.ndarray
    row_labels: list
    col_labels: list
    measure: str


def layer_heatmap(a, b, measure: str = "gnsa", policy: NormalizationPolicy = DEFAULT_POLICY,
                  k: int = 5, labels=None, n_jobs: int | None = None) -> HeatmapMatrix:
    """``values[r, c] = measure(a[r], b[c])`` for two stacks of layer representations.

    ``measure`` is ``"gnsa"``, ``"lnsa"`` (the symmetric metric) or ``"nsa"``.
    ``labels`` is an optional pair of label lists.  Cells are evaluated on a
    thread pool; the output order does not depend on scheduling.
    """
    measure = _check_measure(measure)
    a = [as_cloud(c, f"A[{i}]") for i, c in enumerate(a)]
    b = [as_cloud(c, f"B[{i}]") for i, c in enumerate(b)]
    if not a or not b:
        raise InvalidInput("both layer stacks must be non-empty")
    n = a[0].shape[0]
    for c in a + b:
        if c.shape[0] != n:
            raise ShapeError(f"all layers must share N; got {c.shape[0]} and {n}")
    cfg = NsaConfig(k=k, policy=policy)
    pa = [_Prepared(c, policy, cfg.eps_norm) for c in a]
    pb = [_Prepared(c, policy, cfg.eps_norm) for c in b]
    cells = [(r, c) for r in range(len(a)) for c in range(len(b))]
    workers = n_jobs or kernels.n_threads() or None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        flat = list(pool.map(lambda rc: _measure(pa[rc[0]], pb[rc[1]], measure, cfg), cells))
    values = np.array(flat).reshape(len(a), len(b))
    if labels is None:
        labels = ([f"A{i}" for i in range(len(a))], [f"B{i}" for i in range(len(b))])
    row_labels, col_labels = list(labels[0]), list(labels[1])
    if len(row_labels) != len(a) or len(col_labels) != len(b):
        raise InvalidInput("label counts must match the layer counts")
    return HeatmapMatrix(values, row_labels, col_labels, measure)


# -- sensitivity -----------------------------------------------------------------

@dataclass
class SensitivityCurve:
    m: np.ndarray
    values: np.ndarray
    above: np.ndarray
    threshold: float
    order: str
    measure: str

    @property
    def first_crossing(self):
        """Smallest ``m`` whose value exceeds the threshold, or None."""
        hits = np.flatnonzero(self.above)
        return int(self.m[hits[0]]) if hits.size else None

    def rows(self):
        return [(int(m), float(v), bool(f)) for m, v, f in zip(self.m, self.values, self.above)]


def sensitivity_curve(x, policy: NormalizationPolicy = DEFAULT_POLICY, k: int = 5,
                      threshold: float = 0.0, order: str = LEAST_VARIANCE_FIRST,
                      measure: str = "gnsa", cfg: NsaConfig | None = None) -> SensitivityCurve:
    """Dissimilarity between ``x`` and ``x`` with ``m`` principal components removed.

    ``m`` runs over ``0 .. min(N, D) - 1``; ``above`` flags values strictly
    greater than ``threshold``.
    """
    x = as_cloud(x)
    measure = _check_measure(measure)
    if not threshold >= 0:
        raise InvalidInput(f"threshold must be >= 0, got {threshold}")
    cfg = cfg or NsaConfig(k=k, policy=policy)
    base = _Prepared(x, policy, cfg.eps_norm)
    ms = np.arange(min(x.shape))
    values = np.empty(ms.size)
    for m in ms:
        reduced = _Prepared(remove_principal_components(x, int(m), order), policy, cfg.eps_norm)
        values[m] = _measure(base, reduced, measure, cfg)
    return SensitivityCurve(ms, values, values > threshold, float(threshold), order, measure)


# -- pointwise -------------------------------------------------------------------

@dataclass
class PointwiseReport:
    values: np.ndarray
    top_indices: np.ndarray
    total: float


def pointwise_report(x, y, policy: NormalizationPolicy = DEFAULT_POLICY, top: int = 10) -> PointwiseReport:
    """Per-point GNSA with the indices of the ``top`` largest values (largest first)."""
    rep = gnsa(x, y, policy)
    if top < 0:
        raise InvalidInput("top must be >= 0")
    order = np.argsort(-rep.pointwise, kind="stable")[:top]
    return PointwiseReport(rep.pointwise, order, rep.total)
