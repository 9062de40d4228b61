"""Split-sample e-values for quantile regression risk minimizers.

The package builds hypothesis tests from empirical risk gaps rather than
likelihoods: fit on one half of the sample, score against the best
null-constrained fit on the other half, and exponentiate the scaled gap
into an e-value.  Per-quantile e-values are combined with the e-BH
procedure for discovery control and averaged into a single global test.

Modules:

* ``loss``: check-loss evaluation and empirical risk.
* ``solver``: exact quantile regression via simplex on the LP form.
* ``evalue``: sample splitting and the e-value itself.
* ``calibration``: bootstrap selection of the learning rate.
* ``ebh``: e-BH discovery control and e-value merging.
* ``simulate``: Monte Carlo harness for the two synthetic families.
* ``seeding``: per-stage seed derivation from one root seed.
* ``cli``: command-line entry points.
"""

from .calibration import CalibratedRate, CalibrationConfig, CalibrationError, calibrate_omega
from .ebh import EbhResult, EValueSet, MergedEValue, ebh, global_test, merge
from .evalue import (
    CentralConditionEstimate,
    GueResult,
    SplitPlan,
    central_condition_diagnostic,
    exp_capped,
    gue_value,
    make_split,
    reject,
)
from .loss import CheckLoss, Dataset, check_loss, empirical_risk
from .seeding import derive_seed, rng_for
from .simulate import (
    FAMILIES,
    ExperimentError,
    FamilyConfig,
    ReplicationError,
    ReplicationRecord,
    SimConfig,
    SimMetrics,
    default_taus,
    run_experiment,
    run_replication,
    sample_family,
    true_slope,
)
from .solver import ErmSolution, NullSpec, SolverError, solve_erm, solve_erm_constrained

__version__ = "0.1.0"

__all__ = [
    "CalibratedRate",
    "CalibrationConfig",
    "CalibrationError",
    "CentralConditionEstimate",
    "CheckLoss",
    "Dataset",
    "EbhResult",
    "ErmSolution",
    "EValueSet",
    "ExperimentError",
    "FAMILIES",
    "FamilyConfig",
    "GueResult",
    "MergedEValue",
    "NullSpec",
    "ReplicationError",
    "ReplicationRecord",
    "SimConfig",
    "SimMetrics",
    "SolverError",
    "SplitPlan",
    "calibrate_omega",
    "central_condition_diagnostic",
    "check_loss",
    "default_taus",
    "derive_seed",
    "ebh",
    "empirical_risk",
    "exp_capped",
    "global_test",
    "gue_value",
    "make_split",
    "merge",
    "reject",
    "rng_for",
    "run_experiment",
    "run_replication",
    "sample_family",
    "solve_erm",
    "solve_erm_constrained",
    "true_slope",
    "__version__",
]
