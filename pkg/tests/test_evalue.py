"""Split plans, the log-scale e-value, and the exponential-moment diagnostic."""

import math

import numpy as np
import pytest

from gue.evalue import (
    EXP_CAP,
    GueResult,
    central_condition_diagnostic,
    exp_capped,
    gue_value,
    make_split,
    reject,
)
from gue.loss import CheckLoss, Dataset, empirical_risk
from gue.solver import NullSpec


def _dataset(rng, n=40, slope=0.0):
    x = rng.uniform(size=n)
    y = 0.3 + slope * x + rng.normal(scale=0.4, size=n)
    return Dataset(np.column_stack([np.ones(n), x]), y)


def test_exp_capped_scalar_and_array():
    assert exp_capped(0.0) == 1.0
    assert exp_capped(1.0) == pytest.approx(math.e)
    assert exp_capped(EXP_CAP) == np.finfo(np.float64).max
    assert exp_capped(EXP_CAP + 1e6) == np.finfo(np.float64).max
    assert math.isfinite(exp_capped(EXP_CAP - 1e-9))
    out = exp_capped(np.array([-2.0, 0.0, 800.0]))
    assert out.shape == (3,)
    assert out[0] == pytest.approx(math.exp(-2.0))
    assert out[2] == np.finfo(np.float64).max


def test_exp_capped_never_overflows():
    with np.errstate(over="raise"):
        exp_capped(np.array([699.0, 700.0, 1e9]))


def test_make_split_partitions_and_sizes():
    rng = np.random.default_rng(31)
    for _ in range(50):
        n = int(rng.integers(4, 120))
        fraction = float(rng.uniform(0.2, 0.8))
        plan = make_split(n, fraction, int(rng.integers(1 << 30)))
        merged = sorted(plan.s1_indices + plan.s2_indices)
        assert merged == list(range(n))
        assert len(plan.s1_indices) == int(math.floor(fraction * n + 0.5))
        assert plan.s1_indices == tuple(sorted(plan.s1_indices))
        assert plan.s2_indices == tuple(sorted(plan.s2_indices))


def test_make_split_is_deterministic():
    a = make_split(30, 0.5, 77)
    b = make_split(30, 0.5, 77)
    assert a == b
    assert make_split(30, 0.5, 78) != a


def test_make_split_rejects_tiny_or_degenerate_requests():
    with pytest.raises(ValueError):
        make_split(3, 0.5, 0)
    with pytest.raises(ValueError):
        make_split(10, 0.0, 0)
    with pytest.raises(ValueError):
        make_split(4, 0.05, 0)


def test_half_split_of_even_n_is_exact():
    plan = make_split(50, 0.5, 5)
    assert len(plan.s1_indices) == 25
    assert len(plan.s2_indices) == 25


def test_log_gue_identity():
    rng = np.random.default_rng(32)
    data = _dataset(rng, n=40, slope=0.8)
    split = make_split(40, 0.5, 9)
    loss = CheckLoss(0.35)
    result = gue_value(loss, data, split, NullSpec((1,)), omega=2.5)
    n2 = len(split.s2_indices)
    expected = -2.5 * n2 * (result.trained_risk_s2 - result.null_risk_s2)
    assert abs(result.log_gue - expected) <= 1e-12
    trained_check = empirical_risk(
        loss, result.theta_hat_s1, data.subset(split.s2_indices)
    )
    assert result.trained_risk_s2 == pytest.approx(trained_check, abs=1e-12)


def test_log_gue_scales_linearly_in_omega():
    rng = np.random.default_rng(33)
    data = _dataset(rng, n=36, slope=0.5)
    split = make_split(36, 0.5, 3)
    loss = CheckLoss(0.5)
    one = gue_value(loss, data, split, NullSpec((1,)), omega=1.0)
    three = gue_value(loss, data, split, NullSpec((1,)), omega=3.0)
    assert three.log_gue == pytest.approx(3.0 * one.log_gue, rel=1e-12, abs=1e-12)


def test_composite_null_dominates_any_fixed_null_point():
    rng = np.random.default_rng(34)
    data = _dataset(rng, n=30, slope=0.0)
    split = make_split(30, 0.5, 21)
    loss = CheckLoss(0.4)
    result = gue_value(loss, data, split, NullSpec((1,)), omega=2.0)
    s2 = data.subset(split.s2_indices)
    for intercept in (-0.5, 0.0, 0.3, 0.8):
        point_risk = empirical_risk(loss, np.array([intercept, 0.0]), s2)
        assert result.null_risk_s2 <= point_risk + 1e-12


def test_gue_value_is_deterministic():
    rng = np.random.default_rng(35)
    data = _dataset(rng, n=28, slope=0.2)
    split = make_split(28, 0.5, 1)
    loss = CheckLoss(0.6)
    a = gue_value(loss, data, split, NullSpec((1,)), omega=4.0)
    b = gue_value(loss, data, split, NullSpec((1,)), omega=4.0)
    assert a.log_gue == b.log_gue
    assert a.theta_hat_s1.tobytes() == b.theta_hat_s1.tobytes()


def test_gue_value_rejects_bad_omega_and_bad_split():
    rng = np.random.default_rng(36)
    data = _dataset(rng, n=20)
    split = make_split(20, 0.5, 2)
    loss = CheckLoss(0.5)
    with pytest.raises(ValueError, match="omega"):
        gue_value(loss, data, split, NullSpec((1,)), omega=0.0)
    wrong = make_split(22, 0.5, 2)
    with pytest.raises(ValueError, match="split"):
        gue_value(loss, data, wrong, NullSpec((1,)), omega=1.0)


def test_reject_uses_weak_inequality():
    base = GueResult(
        log_gue=-math.log(0.1),
        omega=1.0,
        theta_hat_s1=np.zeros(2),
        null_risk_s2=0.0,
        trained_risk_s2=0.0,
        null=NullSpec((1,)),
    )
    assert reject(base, 0.1)
    below = GueResult(
        log_gue=-math.log(0.1) - 1e-9,
        omega=1.0,
        theta_hat_s1=np.zeros(2),
        null_risk_s2=0.0,
        trained_risk_s2=0.0,
        null=NullSpec((1,)),
    )
    assert not reject(below, 0.1)
    with pytest.raises(ValueError):
        reject(base, 1.0)


def _uniform_sampler(rng, size):
    x = rng.uniform(size=size)
    y = rng.uniform(size=size)
    return np.column_stack([np.ones(size), x]), y


def test_diagnostic_at_zero_rate_is_exactly_one():
    est = central_condition_diagnostic(
        CheckLoss(0.5), _uniform_sampler, [0.5, 0.0], [0.0, 1.0], 0.0, 500, 4
    )
    assert est.estimate == 1.0
    assert est.std_error == 0.0
    assert est.draws == 500


def test_diagnostic_identical_parameters_give_one():
    est = central_condition_diagnostic(
        CheckLoss(0.3), _uniform_sampler, [0.2, 0.1], [0.2, 0.1], 3.0, 400, 5
    )
    assert est.estimate == 1.0
    assert est.std_error == 0.0


def test_diagnostic_holds_at_small_rate_near_the_minimizer():
    est = central_condition_diagnostic(
        CheckLoss(0.5), _uniform_sampler, [0.5, 0.0], [0.4, 0.2], 0.5, 4000, 6
    )
    assert est.estimate <= 1.0 + 3.0 * est.std_error


def test_diagnostic_input_validation():
    with pytest.raises(ValueError, match="draws"):
        central_condition_diagnostic(
            CheckLoss(0.5), _uniform_sampler, [0.0, 0.0], [0.0, 0.0], 1.0, 99, 0
        )
    with pytest.raises(ValueError, match="omega"):
        central_condition_diagnostic(
            CheckLoss(0.5), _uniform_sampler, [0.0, 0.0], [0.0, 0.0], -1.0, 200, 0
        )
