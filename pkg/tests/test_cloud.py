import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsalign.cloud import (
    LEAST_VARIANCE_FIRST,
    MOST_VARIANCE_FIRST,
    NormalizationPolicy,
    as_cloud,
    blob_centers,
    center,
    compute_normalizer,
    make_blobs,
    make_spheres,
    make_swiss_roll,
    pairwise_distances,
    principal_axes,
    remove_principal_components,
    rng_from_seed,
)
from nsalign.errors import DegenerateCloud, InvalidInput, ShapeError
from conftest import random_cloud

CENTERED = NormalizationPolicy("centered")


def test_pairwise_two_points():
    np.testing.assert_array_equal(pairwise_distances([[0.0], [3.0]]), [[0, 3], [3, 0]])


def test_pairwise_basis_is_sqrt2():
    d = pairwise_distances(np.eye(3))
    off = d[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, np.sqrt(2), rtol=0, atol=1e-15)


def test_pairwise_duplicate_point():
    np.testing.assert_array_equal(pairwise_distances([[1.5, 2.0], [1.5, 2.0]]), np.zeros((2, 2)))


def test_pairwise_rejects_non_finite():
    with pytest.raises(InvalidInput, match="row 1, column 0"):
        pairwise_distances([[0.0, 1.0], [np.nan, 2.0]])


def test_cloud_validation():
    with pytest.raises(ShapeError):
        as_cloud(np.zeros(3))
    with pytest.raises(ShapeError):
        as_cloud(np.zeros((1, 3)))
    with pytest.raises(InvalidInput):
        as_cloud(np.array([["a", "b"], ["c", "d"]]))
    out = as_cloud(np.ones((3, 2), dtype=np.float32))
    assert out.dtype == np.float64 and out.flags.c_contiguous


def test_metric_axioms_on_random_triples():
    x = random_cloud(0, 200, 6)
    d = pairwise_distances(x)
    rng = rng_from_seed(1)
    i, j, k = rng.integers(0, 200, (3, 1000))
    assert np.all(d[i, k] <= d[i, j] + d[j, k] + 1e-9)
    assert np.array_equal(d, d.T)


def test_normalizer_examples():
    assert compute_normalizer([[1.0], [-2.0]]) == 2.0
    np.testing.assert_allclose(compute_normalizer(np.eye(3), CENTERED), np.sqrt(6) / 3, rtol=1e-15)
    with pytest.raises(DegenerateCloud):
        compute_normalizer(np.zeros((4, 2)))


def test_quantile_normalizer_is_type7():
    x = random_cloud(3, 50, 4)
    r = np.linalg.norm(x, axis=1)
    pol = NormalizationPolicy("quantile", q=0.9, radius_scale=2.0)
    s = np.sort(r)
    h = (50 - 1) * 0.9
    lo = int(np.floor(h))
    expected = s[lo] + (h - lo) * (s[lo + 1] - s[lo])
    np.testing.assert_allclose(compute_normalizer(x, pol), 2.0 * expected, rtol=1e-14)


def test_policy_validation_and_parse():
    with pytest.raises(InvalidInput):
        NormalizationPolicy("maximal")
    with pytest.raises(InvalidInput):
        NormalizationPolicy("quantile", q=0.0)
    with pytest.raises(InvalidInput):
        NormalizationPolicy(radius_scale=0.0)
    assert NormalizationPolicy.parse("quantile=0.5").q == 0.5
    assert NormalizationPolicy.parse("Centered", 2.0) == NormalizationPolicy("centered", radius_scale=2.0)
    assert NormalizationPolicy.parse("quantile").describe() == "quantile=0.98"


@given(st.integers(0, 2**32), st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_origin_normalizer_homogeneous(seed, c):
    x = random_cloud(seed, 12, 3)
    np.testing.assert_allclose(compute_normalizer(c * x), abs(c) * compute_normalizer(x), rtol=1e-12)


@given(st.integers(0, 2**32))
def test_center_then_origin_equals_centered(seed):
    x = random_cloud(seed, 15, 4) + 3.0
    assert compute_normalizer(center(x)) == compute_normalizer(x, CENTERED)


def test_center_examples():
    np.testing.assert_array_equal(center([[1.0], [3.0]]), [[-1.0], [1.0]])
    x = np.array([[1.0, 1, 0], [1, 0, 1], [0, 1, 1]])
    np.testing.assert_allclose(center(x), x - 2.0 / 3.0, atol=1e-15)
    c = center(random_cloud(2, 20, 3))
    np.testing.assert_allclose(center(c), c, atol=1e-15)
    np.testing.assert_allclose(c.mean(axis=0), 0, atol=1e-12)


def test_remove_zero_components_is_identity():
    x = random_cloud(4, 30, 5)
    np.testing.assert_allclose(remove_principal_components(x, 0), x, atol=1e-10)


def test_remove_noise_direction_projects_onto_line():
    rng = rng_from_seed(5)
    t = rng.standard_normal(100)
    x = np.column_stack([t, 2 * t]) + 1e-4 * rng.standard_normal((100, 2)) + [3.0, -1.0]
    out = remove_principal_components(x, 1, LEAST_VARIANCE_FIRST)
    evals, _ = principal_axes(out)
    assert evals[0] < 1e-10 * evals.sum()


def test_remove_most_variance_leaves_smallest_eigenvalue():
    x = random_cloud(6, 80, 4) * [5.0, 3.0, 2.0, 0.5]
    evals, _ = principal_axes(x)
    out = remove_principal_components(x, 3, MOST_VARIANCE_FIRST)
    remaining = principal_axes(out)[0].sum()
    np.testing.assert_allclose(remaining, evals[0], atol=1e-8)


def test_remove_preserves_centroid_and_checks_m():
    x = random_cloud(7, 40, 6) + 7.0
    out = remove_principal_components(x, 4, MOST_VARIANCE_FIRST)
    np.testing.assert_allclose(out.mean(axis=0), x.mean(axis=0), atol=1e-10)
    with pytest.raises(InvalidInput):
        remove_principal_components(x, 6)
    with pytest.raises(InvalidInput):
        remove_principal_components(x, 1, "sideways")


def test_swiss_roll_parametrization_and_fixture():
    x, params = make_swiss_roll(1000, 0.0, seed=7)
    np.testing.assert_allclose(x[:, 0] ** 2 + x[:, 2] ** 2, params[:, 0] ** 2, rtol=1e-12, atol=1e-9)
    assert np.all((params[:, 0] >= 1.5 * np.pi) & (params[:, 0] <= 4.5 * np.pi))
    assert np.all((params[:, 1] >= 0) & (params[:, 1] <= 21))
    # regression fixture: generator output frozen at first release
    np.testing.assert_array_equal(
        x[0], [-8.739400772475273, 20.545657902109472, 2.6449992125983384])
    x2, _ = make_swiss_roll(1000, 0.0, seed=7)
    assert np.array_equal(x, x2)
    noisy, _ = make_swiss_roll(50, 0.1, seed=7)
    assert not np.array_equal(noisy, make_swiss_roll(50, 0.0, seed=7)[0])
    with pytest.raises(InvalidInput):
        make_swiss_roll(5)


def test_blobs():
    x, labels = make_blobs(2000, 4, n_clusters=1, seed=3)
    assert np.all(np.abs(x.mean(axis=0)) <= 5 / np.sqrt(2000))
    x, labels = make_blobs(200, 5, n_clusters=2, separation=100.0, seed=4)
    d = pairwise_distances(x)
    np.fill_diagonal(d, np.inf)
    assert np.all(labels[np.argmin(d, axis=1)] == labels)
    assert np.array_equal(make_blobs(50, 3, seed=9)[0], make_blobs(50, 3, seed=9)[0])
    c = blob_centers(5, 3, 10.0)
    dc = pairwise_distances(c)
    np.testing.assert_allclose(dc[~np.eye(3, dtype=bool)], 10.0, rtol=1e-14)
    assert np.allclose(pairwise_distances(blob_centers(2, 4, 3.0))[0, 1], 3.0)


def test_spheres():
    x, labels, centers = make_spheres(30, n_spheres=10, d=100, seed=2, return_centers=True)
    assert len(np.unique(labels)) == 11
    radii = np.linalg.norm(x - centers[labels], axis=1)
    expected = np.where(labels == 10, 5.0, 1.0)
    np.testing.assert_allclose(radii, expected, atol=1e-9)
    assert np.array_equal(make_spheres(5, 3, 4, seed=1)[0], make_spheres(5, 3, 4, seed=1)[0])
    with pytest.raises(InvalidInput):
        make_spheres(5, d=1)
