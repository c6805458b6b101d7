import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsalign.cloud import NormalizationPolicy, make_blobs
from nsalign.composite import (
    NsaConfig,
    SubsetEstimate,
    grad_check,
    nsa_grad,
    nsa_loss,
    subset_estimate,
)
from nsalign.errors import InvalidInput
from nsalign.gnsa import gnsa, gnsa_grad
from nsalign.lnsa import lnsa_directed, lnsa_grad
from conftest import basis_clouds, random_cloud


def test_config_validation():
    with pytest.raises(InvalidInput):
        NsaConfig(l=0, g=0)
    with pytest.raises(InvalidInput):
        NsaConfig(l=-1)
    with pytest.raises(InvalidInput):
        NsaConfig(k=0)
    with pytest.raises(InvalidInput):
        NsaConfig(eps_dist=0)
    d = NsaConfig().to_dict()
    assert d["l"] == 1.0 and d["g"] == 1.0 and d["norm"] == "origin"


def test_loss_examples():
    x = random_cloud(0, 30, 6)
    z = random_cloud(1, 30, 2)
    assert nsa_loss(x, x) == 0.0
    assert nsa_loss(x, z, NsaConfig(l=0, g=2.5)) == 2.5 * gnsa(x, z).total
    _, y, x_a = basis_clouds()
    assert nsa_loss(y, x_a, NsaConfig(g=0, l=3.0, k=2)) == pytest.approx(3.0 * np.log(2.5) ** 2 / 24, rel=1e-12)


@given(st.integers(0, 2**32), st.floats(0, 5), st.floats(0, 5))
def test_loss_is_linear_in_weights(seed, l, g):
    if l + g == 0:
        l = 1.0
    x = random_cloud(seed, 20, 5)
    z = random_cloud(seed + 1, 20, 2)
    lhs = nsa_loss(x, z, NsaConfig(l=l, g=g))
    rhs = l * nsa_loss(x, z, NsaConfig(l=1, g=0)) + g * nsa_loss(x, z, NsaConfig(l=0, g=1))
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert lhs >= 0


def test_loss_uses_reference_neighborhoods():
    x = random_cloud(2, 25, 4)
    z = random_cloud(3, 25, 2)
    assert nsa_loss(x, z, NsaConfig(g=0)) == lnsa_directed(z, x, 5)[0]


def test_grad_composition():
    x = random_cloud(4, 30, 5)
    z = random_cloud(5, 30, 2)
    assert np.all(nsa_grad(x, x) == 0)
    np.testing.assert_array_equal(nsa_grad(x, z, NsaConfig(l=0, g=2.0)), 2.0 * gnsa_grad(x, z))
    np.testing.assert_allclose(nsa_grad(x, z), gnsa_grad(x, z) + lnsa_grad(x, z, 5), rtol=0, atol=0)


@pytest.mark.parametrize("loss", ["GNSA", "LNSA", "NSA"])
def test_grad_check_random_instances(loss):
    worst = 0.0
    for seed in range(5):
        x = random_cloud(seed, 40, 8)
        z = random_cloud(seed + 50, 40, 3)
        rep = grad_check(loss, x, z)
        worst = max(worst, rep.max_rel_err)
        assert rep.n_checked + rep.n_skipped == z.size
    assert worst <= 1e-4


def test_grad_check_at_minimum_is_flat():
    x = random_cloud(6, 40, 3)
    # every |.| term sits at its kink, where a central difference carries an O(h) bias
    rep = grad_check("NSA", x, x.copy(), h=1e-6)
    assert rep.max_abs_analytic <= 1e-7
    assert rep.max_abs_numeric <= 1e-7


def test_grad_check_validation():
    x = random_cloud(7, 10, 2)
    with pytest.raises(InvalidInput):
        grad_check("MSE", x, x)
    with pytest.raises(InvalidInput):
        grad_check("GNSA", x, x, h=0)
    rep = grad_check("gnsa", x, x + 0.1 * random_cloud(8, 10, 2))
    assert set(rep.to_dict()) >= {"max_abs_err", "max_rel_err", "argmax"}


def test_subset_full_batch_is_exact():
    x = random_cloud(8, 60, 5)
    y = random_cloud(9, 60, 2)
    est = subset_estimate(x, y, 60, 4)
    assert np.all(est.per_trial == est.full_value)
    assert est.rel_error == 0.0
    assert est.full_value == gnsa(x, y).total


def test_subset_single_pair():
    x = random_cloud(10, 30, 3)
    y = random_cloud(11, 30, 3)
    cfg = NsaConfig(seed=5)
    est = subset_estimate(x, y, 2, 1, cfg)
    from nsalign.cloud import compute_normalizer, rng_from_seed
    i, j = np.sort(rng_from_seed(5).choice(30, 2, replace=False))
    expected = 2 * abs(np.linalg.norm(x[i] - x[j]) / compute_normalizer(x)
                       - np.linalg.norm(y[i] - y[j]) / compute_normalizer(y)) / 4
    assert est.per_trial.shape == (1,)
    assert est.per_trial[0] == pytest.approx(expected, rel=1e-13)


def test_subset_invariants_and_errors():
    x = random_cloud(12, 50, 3)
    y = random_cloud(13, 50, 3)
    est = subset_estimate(x, y, 10, 30)
    assert isinstance(est, SubsetEstimate)
    assert est.mean == pytest.approx(est.per_trial.mean(), abs=1e-12)
    assert est.rel_error == abs(est.mean - est.full_value) / est.full_value
    with pytest.raises(InvalidInput):
        subset_estimate(x, y, 1, 3)
    with pytest.raises(InvalidInput):
        subset_estimate(x, y, 51, 3)
    with pytest.raises(InvalidInput):
        subset_estimate(x, y, 10, 0)
    again = subset_estimate(x, y, 10, 30)
    assert np.array_equal(est.per_trial, again.per_trial)


def test_subset_estimate_converges_with_full_normalizers():
    x, _ = make_blobs(600, 10, 3, separation=10.0, seed=1)
    y = x[:, :3] + 0.5 * random_cloud(14, 600, 3)
    est = subset_estimate(x, y, 100, 300)
    assert est.rel_error <= 0.02


def test_per_batch_normalizers_are_biased():
    # documents the gap; no fixed bound is asserted
    x, _ = make_blobs(600, 10, 3, separation=10.0, seed=1)
    y = x[:, :3] + 0.5 * random_cloud(14, 600, 3)
    fixed = subset_estimate(x, y, 20, 300)
    per_batch = subset_estimate(x, y, 20, 300, per_batch_norm=True)
    assert per_batch.per_batch_norm and not fixed.per_batch_norm
    assert per_batch.rel_error != fixed.rel_error


def test_quantile_policy_in_grad_check():
    x = random_cloud(15, 30, 4)
    z = random_cloud(16, 30, 2)
    rep = grad_check("NSA", x, z, NsaConfig(policy=NormalizationPolicy("quantile", 0.9)))
    assert rep.max_rel_err <= 1e-4
