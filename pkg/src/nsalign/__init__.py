"""Normalized space alignment: compare point clouds and optimise embeddings."""
from ._version import __version__
from .analysis import (
    HeatmapMatrix,
    PointwiseReport,
    QualityReport,
    SensitivityCurve,
    knn_consistency,
    layer_heatmap,
    linear_correlation,
    nsa_index,
    pointwise_report,
    quality_report,
    sensitivity_curve,
    triplet_accuracy,
)
from .cloud import (
    LEAST_VARIANCE_FIRST,
    MOST_VARIANCE_FIRST,
    NormalizationPolicy,
    compute_normalizer,
    make_blobs,
    make_spheres,
    make_swiss_roll,
    pairwise_distances,
    remove_principal_components,
)
from .composite import NsaConfig, grad_check, nsa_grad, nsa_loss, subset_estimate
from .errors import (
    DegenerateCloud,
    DegenerateNeighborhood,
    DivergedError,
    FileAccessError,
    FormatError,
    InvalidInput,
    NsaError,
    NumericalError,
    ShapeError,
    UndefinedCorrelation,
)
from .gnsa import gnsa, gnsa_grad, gnsa_pointwise
from .io import RunManifest, load_embedding, save_embedding
from .kernels import BACKEND
from .lnsa import (
    ad_inverse,
    intrinsic_dim,
    knn,
    lid,
    lnsa_directed,
    lnsa_grad,
    lnsa_metric,
    symmetric_lid_inverse,
)
from .reducer import ReducerConfig, TrainTrace, geodesic_distances, principal_projection, reduce
