"""Bootstrap learning-rate selection: determinism, bounds, and edge paths."""

import numpy as np
import pytest

from gue.calibration import (
    CalibrationConfig,
    CalibrationError,
    calibrate_omega,
)
from gue.evalue import gue_value, make_split, reject
from gue.loss import CheckLoss, Dataset
from gue.seeding import derive_seed
from gue.simulate import FamilyConfig, sample_family
from gue.solver import NullSpec

SLOPE_NULL = NullSpec((1,))


def _noisy_dataset(rng, n=24, slope=0.4):
    x = rng.uniform(size=n)
    y = 0.2 + slope * x + rng.normal(scale=0.3, size=n)
    return Dataset(np.column_stack([np.ones(n), x]), y)


def test_config_validation():
    with pytest.raises(ValueError):
        CalibrationConfig(alpha=0.0)
    with pytest.raises(ValueError):
        CalibrationConfig(alpha=0.1, bootstrap_reps=49)
    with pytest.raises(ValueError):
        CalibrationConfig(alpha=0.1, omega_tolerance=11.0, omega_cap=10.0)
    cfg = CalibrationConfig(alpha=0.1)
    assert cfg.bootstrap_reps == 100
    assert cfg.omega_cap == 10.0
    assert cfg.omega_tolerance == 1e-3


def test_calibration_is_deterministic():
    rng = np.random.default_rng(41)
    data = _noisy_dataset(rng, n=30)
    cfg = CalibrationConfig(alpha=0.1, seed=13)
    first = calibrate_omega(CheckLoss(0.5), data, SLOPE_NULL, cfg, 0.5)
    second = calibrate_omega(CheckLoss(0.5), data, SLOPE_NULL, cfg, 0.5)
    assert first.omega == second.omega
    assert first.achieved_coverage == second.achieved_coverage
    assert first.search_evals == second.search_evals


def test_result_respects_bounds_and_coverage_domain():
    rng = np.random.default_rng(42)
    for seed in range(8):
        data = _noisy_dataset(rng, n=int(rng.integers(16, 40)))
        cfg = CalibrationConfig(alpha=0.1, seed=seed)
        rate = calibrate_omega(CheckLoss(0.25), data, SLOPE_NULL, cfg, 0.5)
        assert cfg.omega_tolerance <= rate.omega <= cfg.omega_cap
        assert 0.0 <= rate.achieved_coverage <= 1.0
        assert rate.search_evals >= 1


def test_exact_linear_data_returns_the_cap():
    x = np.linspace(0.05, 0.95, 12)
    y = 0.4 + 1.3 * x
    data = Dataset(np.column_stack([np.ones(12), x]), y)
    cfg = CalibrationConfig(alpha=0.1, seed=1)
    rate = calibrate_omega(CheckLoss(0.3), data, SLOPE_NULL, cfg, 0.5)
    assert rate.omega == cfg.omega_cap
    assert rate.achieved_coverage == 1.0


def test_floor_return_is_flagged_by_low_coverage():
    rng = np.random.default_rng(8)
    n = 16
    x = rng.uniform(size=n)
    y = 1e6 * (0.2 + 0.5 * x + rng.normal(scale=0.3, size=n))
    data = Dataset(np.column_stack([np.ones(n), x]), y)
    cfg = CalibrationConfig(alpha=0.1, seed=3)
    rate = calibrate_omega(CheckLoss(0.5), data, SLOPE_NULL, cfg, 0.5)
    assert rate.omega == cfg.omega_tolerance
    assert rate.achieved_coverage < 1.0 - cfg.alpha


def test_wider_cap_never_shrinks_the_selected_rate():
    rng = np.random.default_rng(43)
    data = _noisy_dataset(rng, n=28)
    narrow = calibrate_omega(
        CheckLoss(0.5), data, SLOPE_NULL, CalibrationConfig(alpha=0.1, seed=7), 0.5
    )
    wide = calibrate_omega(
        CheckLoss(0.5),
        data,
        SLOPE_NULL,
        CalibrationConfig(alpha=0.1, omega_cap=200.0, seed=7),
        0.5,
    )
    assert wide.omega >= narrow.omega - 1e-9


def test_rank_deficient_data_raises_calibration_error():
    design = np.column_stack([np.ones(12), np.full(12, 2.0)])
    data = Dataset(design, np.arange(12.0))
    with pytest.raises(CalibrationError):
        calibrate_omega(
            CheckLoss(0.5), data, SLOPE_NULL, CalibrationConfig(alpha=0.1), 0.5
        )


def test_calibrated_test_keeps_its_level():
    # Fresh-data check of the end product: at a signal-free configuration the
    # test rejecting at the per-dataset calibrated rate should stay within
    # two binomial standard errors of the nominal level.
    family = FamilyConfig("triangle", 0.0)
    loss = CheckLoss(0.5)
    alpha = 0.1
    reps = 100
    rejections = 0
    for rep in range(reps):
        data = sample_family(family, 50, derive_seed(1000, rep, 0))
        split = make_split(50, 0.5, derive_seed(1000, rep, 1))
        cfg = CalibrationConfig(alpha=alpha, seed=derive_seed(1000, rep, 2))
        rate = calibrate_omega(loss, data, SLOPE_NULL, cfg, 0.5)
        result = gue_value(loss, data, split, SLOPE_NULL, rate.omega)
        if reject(result, alpha):
            rejections += 1
    assert rejections / reps <= alpha + 0.06
