"""Checks for the check loss and empirical risk."""

import numpy as np
import pytest

from gue.loss import CheckLoss, Dataset, check_loss, empirical_risk


def _random_dataset(rng, n=12, p=3):
    design = np.column_stack([np.ones(n), rng.uniform(-2.0, 2.0, size=(n, p - 1))])
    response = rng.normal(size=n)
    return Dataset(design, response)


def test_known_loss_values():
    quarter = CheckLoss(0.25)
    assert check_loss(quarter, [0.0], [1.0], 2.0) == pytest.approx(0.5)
    assert check_loss(quarter, [0.0], [1.0], -2.0) == pytest.approx(1.5)
    ninety = CheckLoss(0.9)
    assert ninety.residual_loss(1.0) == pytest.approx(0.9)
    assert ninety.residual_loss(-1.0) == pytest.approx(0.1)
    assert ninety.residual_loss(0.0) == 0.0


def test_median_loss_is_half_absolute_error():
    rng = np.random.default_rng(11)
    loss = CheckLoss(0.5)
    residuals = rng.normal(scale=3.0, size=200)
    np.testing.assert_allclose(
        loss.residual_loss(residuals), 0.5 * np.abs(residuals), rtol=0, atol=1e-15
    )


def test_loss_nonnegative_and_zero_only_at_zero():
    rng = np.random.default_rng(12)
    for tau in (0.02, 0.3, 0.5, 0.77, 0.98):
        loss = CheckLoss(tau)
        residuals = rng.normal(size=100)
        values = loss.residual_loss(residuals)
        assert np.all(values >= 0.0)
        assert np.all((values == 0.0) == (residuals == 0.0))


def test_loss_is_convex_in_the_residual():
    rng = np.random.default_rng(13)
    for _ in range(200):
        tau = rng.uniform(0.01, 0.99)
        loss = CheckLoss(tau)
        r1, r2 = rng.normal(scale=2.0, size=2)
        lam = rng.uniform()
        mixed = loss.residual_loss(lam * r1 + (1.0 - lam) * r2)
        bound = lam * loss.residual_loss(r1) + (1.0 - lam) * loss.residual_loss(r2)
        assert mixed <= bound + 1e-12


def test_vectorized_loss_matches_row_loss():
    rng = np.random.default_rng(14)
    data = _random_dataset(rng, n=17, p=3)
    loss = CheckLoss(0.3)
    theta = rng.normal(size=data.p)
    residual = data.response - data.design @ theta
    vectorized = loss.residual_loss(residual)
    rows = [
        loss.row_loss(theta, data.design[i], float(data.response[i]))
        for i in range(data.n)
    ]
    np.testing.assert_allclose(vectorized, rows, rtol=0, atol=1e-15)


def test_empirical_risk_is_mean_of_row_losses():
    rng = np.random.default_rng(15)
    data = _random_dataset(rng, n=9, p=2)
    loss = CheckLoss(0.4)
    theta = rng.normal(size=2)
    rows = [
        loss.row_loss(theta, data.design[i], float(data.response[i]))
        for i in range(data.n)
    ]
    assert empirical_risk(loss, theta, data) == pytest.approx(np.mean(rows), abs=1e-15)


def test_empirical_risk_permutation_invariant():
    rng = np.random.default_rng(16)
    data = _random_dataset(rng, n=25, p=3)
    loss = CheckLoss(0.65)
    theta = rng.normal(size=3)
    baseline = empirical_risk(loss, theta, data)
    for _ in range(10):
        perm = rng.permutation(data.n)
        shuffled = data.subset(perm)
        assert empirical_risk(loss, theta, shuffled) == pytest.approx(
            baseline, abs=1e-14
        )


def test_empirical_risk_rejects_wrong_shape():
    rng = np.random.default_rng(17)
    data = _random_dataset(rng, n=6, p=2)
    with pytest.raises(ValueError, match="shape"):
        empirical_risk(CheckLoss(0.5), np.zeros(3), data)


def test_tau_domain_is_open():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError, match="tau"):
            CheckLoss(bad)


def test_dataset_requires_intercept_column():
    with pytest.raises(ValueError, match="intercept"):
        Dataset(np.array([[2.0, 1.0], [1.0, 3.0]]), np.zeros(2))


def test_dataset_rejects_nonfinite_entries():
    design = np.array([[1.0, np.nan], [1.0, 2.0]])
    with pytest.raises(ValueError, match="finite"):
        Dataset(design, np.zeros(2))
    with pytest.raises(ValueError, match="finite"):
        Dataset(np.ones((2, 1)), np.array([0.0, np.inf]))


def test_dataset_arrays_are_frozen_copies():
    source = np.column_stack([np.ones(4), np.arange(4.0)])
    response = np.arange(4.0)
    data = Dataset(source, response)
    source[0, 1] = 99.0
    response[0] = 99.0
    assert data.design[0, 1] == 0.0
    assert data.response[0] == 0.0
    with pytest.raises(ValueError):
        data.design[0, 0] = 2.0


def test_dataset_subset_selects_rows():
    rng = np.random.default_rng(18)
    data = _random_dataset(rng, n=10, p=2)
    sub = data.subset([3, 1, 7])
    assert sub.n == 3
    np.testing.assert_array_equal(sub.design, data.design[[3, 1, 7]])
    np.testing.assert_array_equal(sub.response, data.response[[3, 1, 7]])
