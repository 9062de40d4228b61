"""Monte Carlo harness: two data families, the per-quantile testing
pipeline, and replication-level aggregation.

Both families draw X ~ Uniform(0, 1) with design [1, X].  The triangle
family draws Y | X ~ Uniform(X * signal / 2, 1 - X * signal / 2), whose
conditional tau-quantile is linear in X with slope signal * (1/2 - tau);
the trapezoid family draws Y | X ~ Uniform(0, 1 + signal * (X - 1)) with
slope tau * signal.  At signal 0 both collapse to Y ~ Uniform(0, 1)
independent of X, so every per-quantile null "slope = 0" is true.

One replication draws a single dataset and a single train/evaluate split
shared across the whole quantile grid, calibrates a learning rate per
quantile, computes the per-quantile e-values, and feeds them to e-BH and
the averaging merge.  Replications are pure functions of
(family, sim, rep_index): every random stage derives its seed from the
experiment seed and its coordinates, so results are reproducible rep by
rep and independent of scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import CalibrationConfig, CalibrationError, calibrate_omega
from .ebh import EbhResult, EValueSet, MergedEValue, ebh, global_test, merge
from .evalue import GueResult, gue_value, make_split
from .loss import CheckLoss, Dataset
from .seeding import derive_seed
from .solver import NullSpec, SolverError

FAMILIES = ("triangle", "trapezoid")

_STAGE_DATA = 0
_STAGE_SPLIT = 1
_STAGE_CALIBRATION = 2

# Tested coefficient: the X slope (column 1 of the [1, X] design).
SLOPE_NULL = NullSpec(zeroed_indices=(1,))


def default_taus() -> tuple[float, ...]:
    """The 49-point grid 0.02, 0.04, ..., 0.98.

    Built by rounding so that 0.5 is exactly representable; scoring which
    nulls are true compares true_slope against zero exactly.
    """
    return tuple(round(0.02 * k, 2) for k in range(1, 50))


@dataclass(frozen=True)
class FamilyConfig:
    """One data-generating family and its signal strength."""

    family: str
    signal: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"family must be one of {FAMILIES}, got {self.family!r}"
            )
        if not (0.0 <= self.signal <= 1.0):
            raise ValueError(f"signal must lie in [0, 1], got {self.signal}")


@dataclass(frozen=True)
class SimConfig:
    """Everything one experiment needs besides the family."""

    n: int
    taus: tuple[float, ...] = field(default_factory=default_taus)
    alpha: float = 0.1
    reps: int = 100
    seed: int = 0
    split_fraction: float = 0.5
    calibration: CalibrationConfig | None = None

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"need n >= 4, got {self.n}")
        taus = tuple(float(t) for t in self.taus)
        if not taus:
            raise ValueError("taus must be nonempty")
        if any(not (0.0 < t < 1.0) for t in taus):
            raise ValueError(f"taus must lie strictly in (0, 1), got {taus}")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"taus must be strictly increasing, got {taus}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        if self.reps < 1:
            raise ValueError(f"need reps >= 1, got {self.reps}")
        if not (0.0 < self.split_fraction < 1.0):
            raise ValueError(
                f"split_fraction must lie strictly in (0, 1), got "
                f"{self.split_fraction}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        calibration = self.calibration
        if calibration is None:
            calibration = CalibrationConfig(alpha=self.alpha)
        if calibration.alpha != self.alpha:
            raise ValueError(
                f"calibration targets level {calibration.alpha} but the "
                f"tests run at {self.alpha}; they must match"
            )
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "calibration", calibration)


@dataclass(frozen=True, eq=False)
class SimMetrics:
    """Aggregates over one experiment's replications.

    type2_rate is the share of replications where the global test failed
    to reject; it reads as the Type II error rate when at least one
    per-quantile null is false.  empirical_fdr averages, over
    replications, the false-discovery proportion of the per-quantile e-BH
    discoveries before any merging.  mean_omega_per_tau pairs each
    quantile with (mean, standard error) of its calibrated rate.
    """

    rejection_rate: float
    type2_rate: float
    empirical_fdr: float
    mean_omega_per_tau: tuple[tuple[float, float], ...]


@dataclass(frozen=True, eq=False)
class ReplicationRecord:
    """Everything one replication produced, in quantile-grid order."""

    rep_index: int
    gue_results: tuple[GueResult, ...]
    omegas: tuple[float, ...]
    ebh_result: EbhResult
    merged: MergedEValue
    global_reject: bool


class ReplicationError(RuntimeError):
    """A replication could not be completed; the message says which."""


class ExperimentError(RuntimeError):
    """One or more replications failed; no partial metrics are produced."""


def _draw_family(config: FamilyConfig, rng: np.random.Generator, size: int):
    x = rng.uniform(0.0, 1.0, size)
    if config.family == "triangle":
        lower = x * (config.signal / 2.0)
        upper = 1.0 - lower
    else:
        lower = np.zeros(size)
        upper = 1.0 + config.signal * (x - 1.0)
    # rng.uniform handles collapsed bounds (lower == upper) by returning
    # the common value, so boundary rows like (triangle, signal 1, X = 1)
    # come out as the degenerate point mass.
    y = rng.uniform(lower, upper)
    design = np.column_stack([np.ones(size), x])
    return design, y


def sample_family(config: FamilyConfig, n: int, seed: int) -> Dataset:
    """n i.i.d. rows from the family, fixed by ``seed``."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    design, response = _draw_family(config, np.random.default_rng(int(seed)), n)
    return Dataset(design=design, response=response)


def family_sampler(config: FamilyConfig):
    """Adapter with the (rng, size) -> (design, response) oracle shape."""

    def sampler(rng: np.random.Generator, size: int):
        return _draw_family(config, rng, size)

    return sampler


def true_slope(config: FamilyConfig, tau: float) -> float:
    """Slope of the conditional tau-quantile in X; zero marks a true null."""
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must lie strictly in (0, 1), got {tau}")
    if config.family == "triangle":
        return config.signal * (0.5 - tau)
    return tau * config.signal


def run_replication(
    family: FamilyConfig, sim: SimConfig, rep_index: int
) -> ReplicationRecord:
    """One dataset, one split, the full quantile grid, e-BH, and merge."""
    if rep_index < 0:
        raise ValueError(f"rep_index must be nonnegative, got {rep_index}")
    data = sample_family(
        family, sim.n, derive_seed(sim.seed, rep_index, _STAGE_DATA)
    )
    plan = make_split(
        sim.n, sim.split_fraction, derive_seed(sim.seed, rep_index, _STAGE_SPLIT)
    )
    omegas = []
    gues = []
    for t, tau in enumerate(sim.taus):
        loss = CheckLoss(tau)
        cal = replace(
            sim.calibration,
            seed=derive_seed(sim.seed, rep_index, _STAGE_CALIBRATION, t),
        )
        try:
            rate = calibrate_omega(
                loss, data, SLOPE_NULL, cal, split_fraction=sim.split_fraction
            )
            result = gue_value(loss, data, plan, SLOPE_NULL, rate.omega)
        except (CalibrationError, SolverError) as exc:
            raise ReplicationError(
                f"replication {rep_index}, tau {tau}: {exc}"
            ) from exc
        omegas.append(rate.omega)
        gues.append(result)
    evalues = EValueSet.from_log_values(
        [g.log_gue for g in gues], ids=tuple(range(len(gues)))
    )
    ebh_result = ebh(evalues, sim.alpha)
    merged = merge(evalues)
    return ReplicationRecord(
        rep_index=rep_index,
        gue_results=tuple(gues),
        omegas=tuple(omegas),
        ebh_result=ebh_result,
        merged=merged,
        global_reject=global_test(merged, sim.alpha),
    )


def run_experiment(
    family: FamilyConfig, sim: SimConfig, threads: int = 1
) -> SimMetrics:
    """Aggregate ``sim.reps`` replications into SimMetrics.

    Replications may run on a thread pool; aggregation is a fold in
    rep_index order either way, so the metrics do not depend on
    scheduling.  Any replication failure aborts the experiment.
    """
    if threads < 1:
        raise ValueError(f"need threads >= 1, got {threads}")

    def attempt(rep_index: int):
        try:
            return run_replication(family, sim, rep_index)
        except ReplicationError as exc:
            return exc

    if threads == 1:
        outcomes = [attempt(r) for r in range(sim.reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(attempt, range(sim.reps)))

    failures = [o for o in outcomes if isinstance(o, ReplicationError)]
    if failures:
        raise ExperimentError(
            f"{len(failures)} of {sim.reps} replications failed; "
            f"first failure: {failures[0]}"
        ) from failures[0]
    records = outcomes

    rejection_rate = sum(r.global_reject for r in records) / sim.reps
    true_null_ids = {
        t for t, tau in enumerate(sim.taus) if true_slope(family, tau) == 0.0
    }
    fdp_total = 0.0
    for record in records:
        discoveries = record.ebh_result.discoveries
        false_count = len(set(discoveries) & true_null_ids)
        fdp_total += false_count / max(1, len(discoveries))
    omega_matrix = np.array([r.omegas for r in records])
    per_tau = []
    for t in range(len(sim.taus)):
        col = omega_matrix[:, t]
        mean = float(np.mean(col))
        se = float(np.std(col, ddof=1) / math.sqrt(sim.reps)) if sim.reps > 1 else 0.0
        per_tau.append((mean, se))
    return SimMetrics(
        rejection_rate=rejection_rate,
        type2_rate=1.0 - rejection_rate,
        empirical_fdr=fdp_total / sim.reps,
        mean_omega_per_tau=tuple(per_tau),
    )
