"""Check loss and empirical risk over fixed-design datasets.

The check (pinball) loss for quantile level tau is

    rho_tau(r) = r * (tau - 1{r < 0}),    r = y - x @ theta,

which is nonnegative, convex in theta, and zero exactly at r = 0.  The
empirical risk of a coefficient vector is the mean of per-row losses.
Downstream code only touches losses through ``row_loss`` / ``residual_loss``
and :func:`empirical_risk`, so a future loss type needs nothing beyond those
two entry points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """A fixed design matrix plus response vector.

    ``design`` is n x p with column 0 identically 1 (the intercept); the
    intercept is an explicit column so that coordinate constraints reduce to
    column deletion.  Arrays are copied and frozen on construction.
    """

    design: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        design = np.array(self.design, dtype=np.float64, order="C", copy=True)
        response = np.array(self.response, dtype=np.float64, order="C", copy=True)
        if design.ndim != 2:
            raise ValueError(f"design must be 2-D, got shape {design.shape}")
        if response.ndim != 1:
            raise ValueError(f"response must be 1-D, got shape {response.shape}")
        n, p = design.shape
        if n < 1 or p < 1:
            raise ValueError(f"dataset needs n >= 1 and p >= 1, got {n} x {p}")
        if response.shape[0] != n:
            raise ValueError(
                f"design has {n} rows but response has {response.shape[0]}"
            )
        if not np.all(design[:, 0] == 1.0):
            raise ValueError("design column 0 must be identically 1 (intercept)")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise ValueError("design and response must be finite")
        design.flags.writeable = False
        response.flags.writeable = False
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    def subset(self, indices) -> "Dataset":
        """Rows at ``indices``, as a new Dataset."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.design[idx], self.response[idx])


@dataclass(frozen=True)
class CheckLoss:
    """Quantile-regression loss at level ``tau``, 0 < tau < 1 strictly."""

    tau: float

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau must lie strictly in (0, 1), got {self.tau}")

    def residual_loss(self, residual):
        """Vectorized rho_tau over an array of residuals."""
        r = np.asarray(residual, dtype=np.float64)
        return r * (self.tau - (r < 0.0))

    def row_loss(self, theta, x, y: float) -> float:
        """Loss of coefficients ``theta`` on a single row ``(x, y)``."""
        theta = np.asarray(theta, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if theta.shape != x.shape:
            raise ValueError(
                f"row has {x.shape[0]} entries but theta has {theta.shape[0]}"
            )
        r = y - float(x @ theta)
        return r * self.tau if r >= 0.0 else r * (self.tau - 1.0)


def check_loss(loss: CheckLoss, theta, x, y: float) -> float:
    """rho_tau evaluated at one row; see :meth:`CheckLoss.row_loss`."""
    return loss.row_loss(theta, x, y)


def empirical_risk(loss: CheckLoss, theta, data: Dataset) -> float:
    """Mean per-row loss of ``theta`` over ``data``.

    Accumulates the n losses first and divides once; rejects empty data so a
    zero division can never happen.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (data.p,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({data.p},) for this dataset"
        )
    if data.n == 0:
        raise ValueError("empirical risk over an empty dataset is undefined")
    residual = data.response - data.design @ theta
    return float(loss.residual_loss(residual).sum() / data.n)
