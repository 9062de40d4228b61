"""Split-sample e-values for composite nulls about risk minimizers.

The e-value for a null set Theta_0 is

    G = exp[-omega * |S2| * (R2(theta_hat_S1) - inf_{theta in Theta_0} R2(theta))],

where theta_hat_S1 is the unconstrained minimizer on the training half S1
and R2 is the empirical risk on the held-out half S2.  Because G is
monotone increasing in R2(theta), the infimum over Theta_0 is attained at
the Theta_0-constrained minimizer of R2, so the composite value is exact
rather than a grid approximation.  Rejection at level alpha is G >= 1/alpha
with the weak inequality.

Everything here stays in log scale; values are exponentiated only at the
multiple-testing boundary, and never on arguments above ``EXP_CAP``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .loss import CheckLoss, Dataset, empirical_risk
from .solver import NullSpec, solve_erm, solve_erm_constrained

EXP_CAP = 700.0


def exp_capped(x):
    """exp() that saturates instead of overflowing.

    Arguments >= EXP_CAP map to the largest finite double and are never
    passed to exp itself.  Scalars in, scalar out; arrays in, array out.
    """
    arr = np.asarray(x, dtype=np.float64)
    big = arr >= EXP_CAP
    out = np.exp(np.where(big, 0.0, arr))
    out = np.where(big, np.finfo(np.float64).max, out)
    if arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SplitPlan:
    """A two-way partition of row indices {0, ..., n-1}.

    s1_indices is the training part (|S1| = round(fraction * n), half-up),
    s2_indices the evaluation part; both are sorted tuples and together
    they exhaust the index range.
    """

    s1_indices: tuple[int, ...]
    s2_indices: tuple[int, ...]
    fraction: float
    seed: int

    @property
    def n(self) -> int:
        return len(self.s1_indices) + len(self.s2_indices)


def make_split(n: int, fraction: float, seed: int) -> SplitPlan:
    """Uniformly random partition of {0, ..., n-1}, fixed by ``seed``.

    Repeated calls with equal arguments return equal plans.
    """
    if n < 4:
        raise ValueError(f"need n >= 4 to split, got {n}")
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must lie strictly in (0, 1), got {fraction}")
    n1 = int(math.floor(fraction * n + 0.5))
    if n1 < 1 or n1 > n - 1:
        raise ValueError(
            f"fraction {fraction} leaves an empty part at n={n} (|S1|={n1})"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return SplitPlan(
        s1_indices=tuple(int(i) for i in np.sort(perm[:n1])),
        s2_indices=tuple(int(i) for i in np.sort(perm[n1:])),
        fraction=float(fraction),
        seed=int(seed),
    )


@dataclass(frozen=True, eq=False)
class GueResult:
    """One e-value in log scale together with the pieces that formed it."""

    log_gue: float
    omega: float
    theta_hat_s1: np.ndarray
    null_risk_s2: float
    trained_risk_s2: float
    null: NullSpec


def _check_split(data: Dataset, split: SplitPlan) -> None:
    if split.n != data.n:
        raise ValueError(
            f"split covers {split.n} rows but the dataset has {data.n}"
        )
    merged = sorted(split.s1_indices + split.s2_indices)
    if merged != list(range(data.n)):
        raise ValueError("split indices do not partition the dataset rows")


def gue_value(
    loss: CheckLoss,
    data: Dataset,
    split: SplitPlan,
    null: NullSpec,
    omega: float,
) -> GueResult:
    """Log e-value for ``null`` from one train/evaluate split.

    Trains the unconstrained minimizer on S1, evaluates both it and the
    null-constrained minimizer on S2, and applies the exponent
    -omega * |S2| * (trained risk - null risk).
    """
    if not omega > 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    _check_split(data, split)
    s1 = data.subset(split.s1_indices)
    s2 = data.subset(split.s2_indices)
    trained = solve_erm(loss, s1)
    trained_risk_s2 = empirical_risk(loss, trained.theta_hat, s2)
    constrained = solve_erm_constrained(loss, s2, null)
    null_risk_s2 = constrained.achieved_risk
    if not (math.isfinite(trained_risk_s2) and math.isfinite(null_risk_s2)):
        raise ValueError(
            f"non-finite risks (trained {trained_risk_s2}, null {null_risk_s2})"
        )
    log_gue = -omega * len(split.s2_indices) * (trained_risk_s2 - null_risk_s2)
    return GueResult(
        log_gue=float(log_gue),
        omega=float(omega),
        theta_hat_s1=trained.theta_hat,
        null_risk_s2=float(null_risk_s2),
        trained_risk_s2=float(trained_risk_s2),
        null=null,
    )


def reject(g: GueResult, alpha: float) -> bool:
    """Level-alpha decision: reject iff G >= 1/alpha (weak inequality)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    return g.log_gue >= -math.log(alpha)


@dataclass(frozen=True)
class CentralConditionEstimate:
    """Monte Carlo estimate of E exp[-omega * (loss(alt) - loss(star))]."""

    estimate: float
    std_error: float
    draws: int


def central_condition_diagnostic(
    loss: CheckLoss,
    sampler,
    theta_star,
    theta_alt,
    omega: float,
    draws: int,
    seed: int,
) -> CentralConditionEstimate:
    """Empirical check of the exponential-moment condition.

    ``sampler(rng, size)`` must return a (design, response) pair of size
    i.i.d. rows; it is invoked once, sequentially.  The condition holds for
    a valid rate when the estimate is <= 1 up to Monte Carlo error.  This
    is a sanity check, not a proof.  omega = 0 is allowed and gives exactly
    1 with zero standard error.
    """
    if draws < 100:
        raise ValueError(f"need at least 100 draws, got {draws}")
    if omega < 0.0:
        raise ValueError(f"omega must be nonnegative, got {omega}")
    rng = np.random.default_rng(int(seed))
    design, response = sampler(rng, draws)
    design = np.asarray(design, dtype=np.float64)
    response = np.asarray(response, dtype=np.float64)
    theta_star = np.asarray(theta_star, dtype=np.float64)
    theta_alt = np.asarray(theta_alt, dtype=np.float64)
    loss_star = loss.residual_loss(response - design @ theta_star)
    loss_alt = loss.residual_loss(response - design @ theta_alt)
    vals = exp_capped(-omega * (loss_alt - loss_star))
    estimate = float(np.mean(vals))
    std_error = float(np.std(vals, ddof=1) / math.sqrt(draws))
    return CentralConditionEstimate(
        estimate=estimate, std_error=std_error, draws=int(draws)
    )
