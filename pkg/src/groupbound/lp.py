"""Dense two-phase primal simplex for equality-form linear programs.

Every optimization in the package (basis pursuit, hull membership, the
group-bound program) is posed as::

    minimize    c @ x
    subject to  A_eq @ x == b_eq
                lower <= x <= upper

and handed to :func:`solve_lp`. The pivot loop runs in the compiled kernel
when available (see ``_backend``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._pykernels import ITERATION_CAP, UNBOUNDED
from ._pykernels import _pivot as _pivot_py
from .errors import DimensionMismatch, InvalidArgument, NumericalFailure

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
TIE_TOL = 1e-12
STALL_LIMIT = 50


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = np.asarray(self.A_eq, dtype=float)
        b = np.asarray(self.b_eq, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise DimensionMismatch("objective must be a non-empty vector")
        d = c.size
        if A.size == 0 and b.size == 0:
            A = A.reshape(0, d)
        if A.ndim != 2 or A.shape[1] != d:
            raise DimensionMismatch(f"A_eq must have {d} columns, got shape {A.shape}")
        if b.ndim != 1 or b.size != A.shape[0]:
            raise DimensionMismatch(f"b_eq must have length {A.shape[0]}, got {b.shape}")
        lower = np.zeros(d) if self.lower is None else np.asarray(self.lower, dtype=float)
        if lower.shape != (d,):
            raise DimensionMismatch(f"lower bounds must have length {d}")
        upper = None
        if self.upper is not None:
            upper = np.asarray(self.upper, dtype=float)
            if upper.shape != (d,):
                raise DimensionMismatch(f"upper bounds must have length {d}")
        for name, arr in (("c", c), ("A_eq", A), ("b_eq", b), ("lower", lower)):
            if not np.all(np.isfinite(arr)):
                raise InvalidArgument(f"{name} contains non-finite entries")
        if upper is not None and np.any(np.isnan(upper)):
            raise InvalidArgument("upper contains NaN")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_eq", A)
        object.__setattr__(self, "b_eq", b)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A_eq.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float
    x: np.ndarray | None = None
    iterations: int = 0
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _standard_form(problem: LinearProgram):
    """Shift to ``z = x - lower >= 0`` and turn finite upper bounds into slack rows."""
    A, b, c = problem.A_eq, problem.b_eq, problem.c
    d = problem.n_vars
    A = A.copy()
    b = b - A @ problem.lower if np.any(problem.lower) else b.copy()
    ub_idx = np.array([], dtype=np.intp)
    if problem.upper is not None:
        ub_idx = np.flatnonzero(np.isfinite(problem.upper))
    k = ub_idx.size
    if k:
        width = problem.upper[ub_idx] - problem.lower[ub_idx]
        top = np.hstack([A, np.zeros((A.shape[0], k))])
        bottom = np.zeros((k, d + k))
        bottom[np.arange(k), ub_idx] = 1.0
        bottom[np.arange(k), d + np.arange(k)] = 1.0
        A = np.vstack([top, bottom])
        b = np.concatenate([b, width])
        c = np.concatenate([c, np.zeros(k)])
    return A, b, c, k


def solve_lp(problem: LinearProgram, *, pivot_rule: str = "dantzig", backend: str | None = None) -> LpSolution:
    """Solve ``problem`` to optimality, or certify infeasibility / unboundedness.

    Parameters
    ----------
    problem : LinearProgram
    pivot_rule : {"dantzig", "bland"}
        Entering-variable rule. ``"dantzig"`` switches to Bland's rule after
        ``STALL_LIMIT`` consecutive degenerate pivots, which rules out cycling.
    backend : {"cython", "python"}, optional
        Kernel override; defaults to the import-time selection.

    Raises
    ------
    NumericalFailure
        If the iteration cap ``50 * (d + r)`` is exhausted.
    """
    if pivot_rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    kern = _backend.get_kernels(backend)
    bland = pivot_rule == "bland"

    d = problem.n_vars
    if problem.upper is not None and np.any(problem.upper < problem.lower):
        return LpSolution(LpStatus.INFEASIBLE, float("nan"))

    A, b, c, n_ub = _standard_form(problem)
    r, n = A.shape
    n_orig_rows = problem.n_rows
    max_iter = 50 * (d + problem.n_rows + n_ub)
    b_scale = 1.0 + (np.abs(b).max() if b.size else 0.0)

    # Equality rows need artificials; upper-bound rows start with their slack basic.
    sign = np.where(b[:n_orig_rows] < 0, -1.0, 1.0)
    A[:n_orig_rows] *= sign[:, None]
    b[:n_orig_rows] *= sign
    n_art = n_orig_rows
    T = np.zeros((r + 1, n + n_art + 1))
    T[:r, :n] = A
    T[np.arange(n_art), n + np.arange(n_art)] = 1.0
    T[:r, -1] = b
    basis = np.empty(r, dtype=np.intp)
    basis[:n_art] = n + np.arange(n_art)
    basis[n_art:] = d + np.arange(n_ub)
    T[r, :n] = -A[:n_art].sum(axis=0)
    T[r, -1] = -b[:n_art].sum()

    iters = 0
    if n_art:
        status, it = kern.simplex_iterate(T, basis, max_iter, OPT_TOL, PIVOT_TOL, TIE_TOL, bland, STALL_LIMIT)
        iters += it
        if status == ITERATION_CAP:
            raise NumericalFailure(f"phase 1 hit the iteration cap ({max_iter})")
        infeas = -T[r, -1]
        if infeas > FEAS_TOL * b_scale:
            return LpSolution(LpStatus.INFEASIBLE, float("nan"), iterations=iters)

    # Pivot remaining artificials out of the basis; rows where that is impossible are redundant.
    keep = np.ones(r, dtype=bool)
    for i in range(r):
        if basis[i] < n:
            continue
        row = np.abs(T[i, :n])
        j = int(np.argmax(row))
        if row[j] > PIVOT_TOL:
            _pivot_py(T, i, j)
            basis[i] = j
        else:
            keep[i] = False

    rows = np.flatnonzero(keep)
    T2 = np.empty((rows.size + 1, n + 1))
    T2[:-1, :n] = T[rows, :n]
    T2[:-1, -1] = T[rows, -1]
    basis = np.ascontiguousarray(basis[rows])
    cb = c[basis]
    T2[-1, :n] = c - cb @ T2[:-1, :n]
    T2[-1, -1] = -(cb @ T2[:-1, -1])
    T2[-1, basis] = 0.0

    status, it = kern.simplex_iterate(T2, basis, max_iter - iters, OPT_TOL, PIVOT_TOL, TIE_TOL, bland, STALL_LIMIT)
    iters += it
    if status == ITERATION_CAP:
        raise NumericalFailure(f"phase 2 hit the iteration cap ({max_iter})")
    if status == UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, float("-inf"), iterations=iters)

    z = _extract(A, b, rows, basis, T2[:-1, -1], n)
    x = z[:d] + problem.lower
    return LpSolution(LpStatus.OPTIMAL, float(problem.c @ x), x, iters, basis[basis < d].copy())


def _extract(A, b, rows, basis, tableau_rhs, n):
    """Primal point from the final basis; re-solves B x_B = b when that is more accurate."""
    A_rows, b_rows = A[rows], b[rows]
    candidates = []
    z = np.zeros(n)
    z[basis] = np.maximum(tableau_rhs, 0.0)
    candidates.append(z)
    if basis.size:
        try:
            xb = np.linalg.solve(A_rows[:, basis], b_rows)
        except np.linalg.LinAlgError:
            pass
        else:
            z2 = np.zeros(n)
            z2[basis] = np.maximum(xb, 0.0)
            candidates.append(z2)
    resid = [np.abs(A_rows @ zz - b_rows).max(initial=0.0) for zz in candidates]
    return candidates[int(np.argmin(resid))]
