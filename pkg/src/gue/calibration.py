"""Bootstrap coverage calibration of the learning rate omega.

The e-value exponent needs a rate small enough that the test keeps its
level; too small wastes power.  This module searches for the largest
omega <= omega_cap whose bootstrap rejection proportion stays at or below
alpha.  One bootstrap evaluation resamples n rows with replacement, treats
the full-data fit as the truth by pinning the tested coefficients at their
full-data estimates, computes the e-value for that pinned null on the
resample, and records whether it rejects at level alpha.  Coverage is one
minus the rejection proportion.

Because the e-value for a fixed resample is exp(-omega * |S2| * gap) with
the risk gap independent of omega, each resample rejects exactly on
omega >= log(1/alpha) / (|S2| * max(0, -gap)).  The resamples are solved
once, the per-resample rejection thresholds are kept, and every probe of
the rejection proportion is a threshold count.  This is arithmetic
shorthand for re-evaluating all resamples at the probed omega, and it
makes the probes share their random numbers by construction.  The search
itself is a bisection on the log scale, terminating when the bracket is
narrower than omega_tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .loss import CheckLoss, Dataset
from .seeding import rng_for
from .solver import _RANK_RTOL, NullSpec, SolverError, _solve_raw, solve_erm

_MAX_REDRAWS = 10


class CalibrationError(RuntimeError):
    """Raised when the bootstrap cannot produce usable resamples."""


@dataclass(frozen=True)
class CalibrationConfig:
    """Hyperparameters of the coverage search."""

    alpha: float
    bootstrap_reps: int = 100
    omega_cap: float = 10.0
    omega_tolerance: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        if self.bootstrap_reps < 50:
            raise ValueError(
                f"bootstrap_reps must be >= 50, got {self.bootstrap_reps}"
            )
        if not (0.0 < self.omega_tolerance < self.omega_cap):
            raise ValueError(
                f"need 0 < omega_tolerance < omega_cap, got tolerance "
                f"{self.omega_tolerance} and cap {self.omega_cap}"
            )


@dataclass(frozen=True)
class CalibratedRate:
    """Selected rate, the coverage it achieved, and the probe count.

    achieved_coverage below 1 - alpha flags that even the smallest probed
    omega over-rejected; the caller decides whether to proceed.
    """

    omega: float
    achieved_coverage: float
    search_evals: int


def _full_column_rank(m: np.ndarray) -> bool:
    """Rank test with cheap paths for intercept-led designs."""
    n, p = m.shape
    if n < p:
        return False
    if p == 1:
        return bool(np.any(m[:, 0] != 0.0))
    if p == 2 and np.all(m[:, 0] == m[0, 0]) and m[0, 0] != 0.0:
        col = m[:, 1]
        return bool(col.min() != col.max())
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] <= 0.0:
        return False
    return bool(int(np.sum(sv > _RANK_RTOL * sv[0])) == p)


def _rejection_thresholds(
    loss: CheckLoss,
    data: Dataset,
    null: NullSpec,
    config: CalibrationConfig,
    split_fraction: float,
) -> np.ndarray:
    """Per-resample smallest rejecting omega (inf when no omega rejects)."""
    design = data.design
    n, p = data.n, data.p
    n1 = int(math.floor(split_fraction * n + 0.5))
    n2 = n - n1
    if n < 4 or n1 < 1 or n2 < 1:
        raise CalibrationError(
            f"cannot split n={n} rows with fraction {split_fraction}"
        )

    # Stand-in truth: pin the tested coefficients at their full-data
    # estimates.  Shifting the response by the pinned part turns that
    # pinned null into the zeroed null on every resample; the constrained
    # full-data fit at those values is the full-data fit itself, so no
    # separate solve is needed for it.
    theta_full = solve_erm(loss, data).theta_hat
    zeroed = list(null.zeroed_indices)
    y_pinned = data.response - design[:, zeroed] @ theta_full[zeroed]
    keep = [j for j in range(p) if j not in null.zeroed_indices]
    reduced = design[:, keep]

    log_inv_alpha = -math.log(config.alpha)
    # One vectorized draw covers every replicate; replicate b redraws (rare,
    # only on rank-deficient resamples) come from their own derived seeds,
    # so each replicate stays a deterministic function of (data, config).
    index_matrix = rng_for(config.seed).integers(0, n, size=(config.bootstrap_reps, n))
    thresholds = np.empty(config.bootstrap_reps)
    for b in range(config.bootstrap_reps):
        idx = index_matrix[b]
        for attempt in range(1, _MAX_REDRAWS + 1):
            # A with-replacement draw of n rows is exchangeable, so its
            # first n1 entries already are a uniform train half.
            s1, s2 = idx[:n1], idx[n1:]
            x1 = design[s1]
            x2_reduced = reduced[s2]
            if _full_column_rank(x1) and _full_column_rank(x2_reduced):
                break
            idx = rng_for(config.seed, b, attempt).integers(0, n, size=n)
        else:
            raise CalibrationError(
                f"resample {b} stayed rank deficient after "
                f"{_MAX_REDRAWS} redraws"
            )
        y1 = y_pinned[s1]
        y2 = y_pinned[s2]
        theta1, _, _ = _solve_raw(x1, y1, loss.tau)
        trained = float(loss.residual_loss(y2 - design[s2] @ theta1).sum()) / n2
        theta2, _, _ = _solve_raw(x2_reduced, y2, loss.tau)
        null_risk = float(loss.residual_loss(y2 - x2_reduced @ theta2).sum()) / n2
        gap = trained - null_risk
        if gap >= 0.0:
            thresholds[b] = np.inf
        else:
            thresholds[b] = log_inv_alpha / (n2 * -gap)
    return thresholds


def calibrate_omega(
    loss: CheckLoss,
    data: Dataset,
    null: NullSpec,
    config: CalibrationConfig,
    split_fraction: float = 0.5,
) -> CalibratedRate:
    """Largest omega <= omega_cap with bootstrap rejection proportion <= alpha.

    Deterministic in (data, config, split_fraction): the resamples carry
    pre-assigned per-replicate seeds and the probe sequence is fixed by the
    thresholds.  If even omega_tolerance over-rejects, that floor is
    returned with its (sub-target) coverage.
    """
    try:
        thresholds = _rejection_thresholds(loss, data, null, config, split_fraction)
    except SolverError as exc:
        raise CalibrationError(f"bootstrap resample failed to solve: {exc}") from exc
    reps = config.bootstrap_reps
    probes: list[tuple[float, float]] = []

    def rejection_proportion(omega: float) -> float:
        prop = float(np.count_nonzero(thresholds <= omega)) / reps
        probes.append((omega, prop))
        return prop

    lo, hi = config.omega_tolerance, config.omega_cap
    prop_cap = rejection_proportion(hi)
    if prop_cap <= config.alpha:
        omega, coverage = hi, 1.0 - prop_cap
    else:
        prop_lo = rejection_proportion(lo)
        if prop_lo > config.alpha:
            omega, coverage = lo, 1.0 - prop_lo
        else:
            while hi - lo > config.omega_tolerance:
                mid = math.sqrt(lo * hi)
                if rejection_proportion(mid) <= config.alpha:
                    lo = mid
                    prop_lo = probes[-1][1]
                else:
                    hi = mid
            omega, coverage = lo, 1.0 - prop_lo

    # The proportion is a threshold count, hence nondecreasing in omega;
    # anything else means the probe bookkeeping is broken.
    by_omega = sorted(probes)
    for (_, p_a), (_, p_b) in zip(by_omega, by_omega[1:]):
        if p_a > p_b:
            raise AssertionError(
                f"rejection proportion decreased along probes: {by_omega}"
            )
    return CalibratedRate(
        omega=omega, achieved_coverage=coverage, search_evals=len(probes)
    )
