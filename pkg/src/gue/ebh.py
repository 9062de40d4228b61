"""e-BH multiple testing and the averaging merge of the adjusted values.

Given e-values e_1..e_M, sort them descending and rescale the m-th largest
to e*_m = m * e_(m) / M.  The discovery set at level alpha is the top k
ranks where k is the largest m with e*_m >= 1/alpha; this controls the
false discovery rate at alpha under arbitrary dependence between the
e-values.  Averaging the rescaled values,

    G_bar = (1/M) * sum_m (m/M) * e_(m),

yields a single e-value for the global null that every constituent null is
true; the global test rejects iff G_bar >= 1/alpha.

Inputs arriving in log scale are exponentiated here, saturating at the
largest finite double; a saturated e-value still triggers every rejection
it should.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evalue import exp_capped

_FLOAT_MAX = float(np.finfo(np.float64).max)


@dataclass(frozen=True, eq=False)
class EValueSet:
    """Raw e-values paired with distinct hypothesis identifiers."""

    values: np.ndarray
    ids: tuple | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("need a nonempty 1-D vector of e-values")
        if not np.all(np.isfinite(values)):
            raise ValueError("e-values must be finite")
        if np.any(values < 0.0):
            raise ValueError("e-values must be nonnegative")
        ids = tuple(self.ids) if self.ids is not None else tuple(range(values.size))
        if len(ids) != values.size:
            raise ValueError(
                f"{values.size} values but {len(ids)} ids"
            )
        if len(set(ids)) != len(ids):
            raise ValueError("hypothesis ids must be distinct")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_log_values(cls, log_values, ids=None) -> "EValueSet":
        """Exponentiate log-scale e-values with overflow saturation."""
        raw = exp_capped(np.asarray(log_values, dtype=np.float64))
        raw = np.atleast_1d(raw)
        if ids is None:
            ids = tuple(range(raw.size))
        return cls(values=raw, ids=ids)

    @property
    def m(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class EbhResult:
    """Descending order, rescaled values, and the level-alpha discoveries."""

    order: tuple
    transformed: np.ndarray
    discoveries: tuple
    alpha: float


@dataclass(frozen=True)
class MergedEValue:
    """The averaged rescaled e-value G_bar for the global null."""

    value: float


def _sorted_transform(evalues: EValueSet):
    """Descending stable order and the rescaled values m * e_(m) / M.

    Ties keep original-index ascending order; tie placement never changes
    the transformed multiset or the merged value, only which id sits at a
    rank.
    """
    m = evalues.m
    order = np.argsort(-evalues.values, kind="stable")
    ranks = np.arange(1, m + 1, dtype=np.float64)
    with np.errstate(over="ignore"):
        transformed = (ranks * evalues.values[order]) / m
    transformed[~np.isfinite(transformed)] = _FLOAT_MAX
    return order, transformed


def ebh(evalues: EValueSet, alpha: float) -> EbhResult:
    """Discovery set of the e-value Benjamini-Hochberg procedure."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    order, transformed = _sorted_transform(evalues)
    reaching = np.nonzero(transformed >= 1.0 / alpha)[0]
    k = int(reaching[-1]) + 1 if reaching.size else 0
    discoveries = tuple(evalues.ids[i] for i in order[:k])
    return EbhResult(
        order=tuple(int(i) for i in order),
        transformed=transformed,
        discoveries=discoveries,
        alpha=float(alpha),
    )


def merge(evalues: EValueSet) -> MergedEValue:
    """Average of the rescaled e-values; itself an e-value."""
    _, transformed = _sorted_transform(evalues)
    with np.errstate(over="ignore"):
        total = float(np.sum(transformed))
    if not np.isfinite(total):
        return MergedEValue(value=_FLOAT_MAX)
    return MergedEValue(value=total / evalues.m)


def global_test(merged: MergedEValue, alpha: float) -> bool:
    """Reject the global null iff G_bar >= 1/alpha (weak inequality)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    return merged.value >= 1.0 / alpha
