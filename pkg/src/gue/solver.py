"""Exact check-loss minimization via a primal simplex on the LP form.

Minimizing the empirical check loss is the linear program

    min  tau * sum(u) + (1 - tau) * sum(v)
    s.t. X theta + u - v = y,    u >= 0, v >= 0, theta free,

whose optimum sits at a vertex interpolating at most p rows.  The free
coefficients are split as theta = a - b with a, b >= 0, giving the variable
order [a_1..a_p, b_1..b_p, u_1..u_n, v_1..v_n].  Pivoting follows Bland's
rule in that order (lowest-index entering variable, ratio-test ties broken
by lowest basic index), which cannot cycle and makes every tie-break
deterministic.

The tableau is stored compactly: the b-columns are the negated a-columns
and the v-columns the negated u-columns, so only a- and u-columns are kept,
with the reduced-cost identities r_b = -r_a and r_v = 1 - r_u.  The start
point is theta = 0 with basis u_i (y_i >= 0) or v_i (y_i < 0) after
flipping negative rows, so no phase-1 is needed.

The core loop is JIT-compiled with numba when available and falls back to
pure Python otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .loss import CheckLoss, Dataset, empirical_risk

_RANK_RTOL = 1e-10
_EPS_ENTER = 1e-9
_EPS_PIVOT = 1e-10
_RATIO_TIE = 1e-9
_DEGEN_TOL = 1e-11

_STATUS_OPTIMAL = 0
_STATUS_ITER_CAP = 1
_STATUS_UNBOUNDED = 2

STATUS_OPTIMAL = "optimal"
STATUS_DEGENERATE = "degenerate-optimal"


class SolverError(RuntimeError):
    """Raised when a minimization cannot be carried out reliably."""


@dataclass(frozen=True)
class NullSpec:
    """Composite null fixing the listed coefficients to zero.

    Indices must be distinct and >= 1; the intercept (column 0) is never
    constrainable.  An empty spec is the unconstrained problem.  Nulls that
    pin a coefficient at a nonzero value c are handled by callers via the
    response shift y - c * x_j, which reduces them exactly to this form.
    """

    zeroed_indices: tuple[int, ...] = field(default=())

    def __post_init__(self):
        idx = tuple(int(j) for j in self.zeroed_indices)
        if any(j < 1 for j in idx):
            raise ValueError(
                f"zeroed indices must be >= 1 (the intercept stays free), got {idx}"
            )
        if len(set(idx)) != len(idx):
            raise ValueError(f"zeroed indices must be distinct, got {idx}")
        object.__setattr__(self, "zeroed_indices", tuple(sorted(idx)))


@dataclass(frozen=True, eq=False)
class ErmSolution:
    """A minimizer, its risk, the pivot count, and a degeneracy flag."""

    theta_hat: np.ndarray
    achieved_risk: float
    iterations: int
    status: str


def _simplex_core_py(X, y, tau, max_iter, eps_enter, eps_pivot, ratio_tie, degen_tol):
    n, p = X.shape
    n_vars = 2 * p + 2 * n
    width = p + n + 1
    rhs = p + n

    T = np.zeros((n + 1, width))
    basis = np.empty(n, dtype=np.int64)
    in_basis = np.zeros(n_vars, dtype=np.bool_)

    # Start at theta = 0.  Rows with y_i < 0 are flipped so that the basic
    # column (u_i or v_i) is +e_i and the right-hand side is nonnegative.
    for i in range(n):
        if y[i] >= 0.0:
            sign = 1.0
            basis[i] = 2 * p + i
        else:
            sign = -1.0
            basis[i] = 2 * p + n + i
        in_basis[basis[i]] = True
        for j in range(p):
            T[i, j] = sign * X[i, j]
        T[i, p + i] = sign
        T[i, rhs] = sign * y[i]

    # Reduced-cost row over the stored a- and u-columns; the rhs slot
    # carries the negated objective.
    neg_obj = 0.0
    for i in range(n):
        ci = tau if y[i] >= 0.0 else 1.0 - tau
        neg_obj -= ci * T[i, rhs]
        T[n, p + i] = tau - ci * T[i, p + i]
    T[n, rhs] = neg_obj
    for j in range(p):
        s = 0.0
        for i in range(n):
            ci = tau if y[i] >= 0.0 else 1.0 - tau
            s += ci * T[i, j]
        T[n, j] = -s

    d = np.empty(n)
    status = 1
    iters = 0
    while iters < max_iter:
        # Entering variable: lowest code whose reduced cost is negative.
        enter = -1
        rc_e = 0.0
        for code in range(n_vars):
            if in_basis[code]:
                continue
            if code < p:
                rc = T[n, code]
            elif code < 2 * p:
                rc = -T[n, code - p]
            elif code < 2 * p + n:
                rc = T[n, p + (code - 2 * p)]
            else:
                rc = 1.0 - T[n, p + (code - 2 * p - n)]
            if rc < -eps_enter:
                enter = code
                rc_e = rc
                break
        if enter == -1:
            status = 0
            break

        # Entering column in the current basis, from the stored columns.
        if enter < p:
            for i in range(n):
                d[i] = T[i, enter]
        elif enter < 2 * p:
            col = enter - p
            for i in range(n):
                d[i] = -T[i, col]
        elif enter < 2 * p + n:
            col = p + (enter - 2 * p)
            for i in range(n):
                d[i] = T[i, col]
        else:
            col = p + (enter - 2 * p - n)
            for i in range(n):
                d[i] = -T[i, col]

        # Ratio test; ties within ratio_tie go to the lowest basic code.
        leave = -1
        best_ratio = 0.0
        best_code = 0
        for i in range(n):
            if d[i] <= eps_pivot:
                continue
            num = T[i, rhs]
            if num < 0.0:
                num = 0.0
            ratio = num / d[i]
            if leave == -1 or ratio < best_ratio - ratio_tie:
                leave = i
                best_ratio = ratio
                best_code = basis[i]
            elif ratio <= best_ratio + ratio_tie and basis[i] < best_code:
                leave = i
                best_code = basis[i]
                if ratio < best_ratio:
                    best_ratio = ratio
        if leave == -1:
            status = 2
            break

        piv = 1.0 / d[leave]
        for c in range(width):
            T[leave, c] *= piv
        for i in range(n + 1):
            if i == leave:
                continue
            f = d[i] if i < n else rc_e
            if f != 0.0:
                for c in range(width):
                    T[i, c] -= f * T[leave, c]
        in_basis[basis[leave]] = False
        in_basis[enter] = True
        basis[leave] = enter
        iters += 1

    degen = 0
    for i in range(n):
        if T[i, rhs] < degen_tol:
            degen = 1
            break

    theta = np.zeros(p)
    for i in range(n):
        b = basis[i]
        if b < p:
            theta[b] += T[i, rhs]
        elif b < 2 * p:
            theta[b - p] -= T[i, rhs]
    return theta, status, iters, degen


try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    _simplex_core = _simplex_core_py
else:
    _simplex_core = njit(cache=True, nogil=True)(_simplex_core_py)


def _max_pivots(n: int) -> int:
    # Observed pivot counts grow like n/2; this cap only trips on
    # genuinely stalled runs.
    return 500 + 50 * n


def _solve_raw(X: np.ndarray, y: np.ndarray, tau: float):
    """Minimize without validation; returns (theta, iterations, degenerate).

    Callers are responsible for rank checks.  X must be n x p float64 with
    full column rank, y length n.
    """
    n = X.shape[0]
    cap = _max_pivots(n)
    theta, status, iters, degen = _simplex_core(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        float(tau),
        cap,
        _EPS_ENTER,
        _EPS_PIVOT,
        _RATIO_TIE,
        _DEGEN_TOL,
    )
    if status == _STATUS_ITER_CAP:
        raise SolverError(f"simplex exceeded {cap} pivots on an n={n} instance")
    if status == _STATUS_UNBOUNDED:
        raise SolverError(
            "simplex found an unbounded direction; the check loss is bounded "
            "below, so the inputs are corrupted"
        )
    return theta, iters, bool(degen)


def check_design_rank(design: np.ndarray) -> None:
    """Raise SolverError unless ``design`` has full column rank.

    Rank counts the singular values above _RANK_RTOL times the largest one.
    """
    design = np.asarray(design, dtype=np.float64)
    sv = np.linalg.svd(design, compute_uv=False)
    if sv.size == 0 or sv[0] <= 0.0:
        raise SolverError("design matrix is identically zero")
    rank = int(np.sum(sv > _RANK_RTOL * sv[0]))
    if rank < design.shape[1]:
        raise SolverError(
            f"design matrix is rank deficient (rank {rank} of "
            f"{design.shape[1]} columns); the minimizer is not identified"
        )


def solve_erm(loss: CheckLoss, data: Dataset) -> ErmSolution:
    """Unconstrained empirical risk minimizer over ``data``."""
    if data.n < data.p:
        raise SolverError(f"need n >= p, got n={data.n}, p={data.p}")
    check_design_rank(data.design)
    theta, iters, degen = _solve_raw(data.design, data.response, loss.tau)
    return ErmSolution(
        theta_hat=theta,
        achieved_risk=empirical_risk(loss, theta, data),
        iterations=iters,
        status=STATUS_DEGENERATE if degen else STATUS_OPTIMAL,
    )


def solve_erm_constrained(
    loss: CheckLoss, data: Dataset, null: NullSpec
) -> ErmSolution:
    """Risk minimizer subject to theta[j] = 0 for j in null.zeroed_indices.

    Implemented by deleting the zeroed columns, solving the reduced
    problem, and re-inflating the solution with zeros, so the constrained
    problem inherits the exactness of the unconstrained one.  Only the
    reduced design needs full column rank.
    """
    zeroed = null.zeroed_indices
    if not zeroed:
        return solve_erm(loss, data)
    if zeroed[-1] >= data.p:
        raise ValueError(
            f"null zeroes column {zeroed[-1]} but the design has only "
            f"{data.p} columns"
        )
    keep = [j for j in range(data.p) if j not in zeroed]
    reduced = data.design[:, keep]
    if data.n < len(keep):
        raise SolverError(
            f"need n >= remaining columns, got n={data.n}, kept {len(keep)}"
        )
    check_design_rank(reduced)
    partial, iters, degen = _solve_raw(reduced, data.response, loss.tau)
    theta = np.zeros(data.p)
    theta[keep] = partial
    return ErmSolution(
        theta_hat=theta,
        achieved_risk=empirical_risk(loss, theta, data),
        iterations=iters,
        status=STATUS_DEGENERATE if degen else STATUS_OPTIMAL,
    )
