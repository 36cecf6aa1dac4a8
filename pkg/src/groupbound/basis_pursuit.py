"""Minimum-l1-norm exact solutions of underdetermined linear systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InfeasibleSystem, InvalidArgument
from .lp import LinearProgram, LpStatus, solve_lp


@dataclass(frozen=True)
class RegressionData:
    """Design matrix ``X`` (observations in rows) and response ``Y``."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidArgument(f"X must be a non-empty matrix, got shape {X.shape}")
        if X.shape[0] != Y.size:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has length {Y.size}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidArgument("X and Y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "RegressionData":
        return RegressionData(self.X[rows], self.Y[rows])


@dataclass(frozen=True)
class BasisPursuitResult:
    coef: np.ndarray
    norm: float


def basis_pursuit(X, y, *, backend=None) -> BasisPursuitResult:
    """Return ``argmin ||b||_1`` subject to ``X b = y``.

    Solved through the split ``b = b_plus - b_minus``. When the minimizer is
    not unique, whichever optimal vertex the simplex reaches is returned.

    Raises
    ------
    InfeasibleSystem
        If ``y`` is not in the column space of ``X``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch(f"X shape {X.shape} incompatible with y of length {y.size}")
    d = X.shape[1]
    sol = solve_lp(LinearProgram(np.ones(2 * d), np.hstack([X, -X]), y), backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleSystem("X b = y has no solution")
    coef = sol.x[:d] - sol.x[d:]
    return BasisPursuitResult(coef, float(np.abs(coef).sum()))
