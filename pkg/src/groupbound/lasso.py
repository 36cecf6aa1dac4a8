"""Cross-validated Lasso by coordinate descent, used as the initial estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import InvalidArgument, NonConvergence

N_LAMBDA = 100
LAMBDA_RATIO = 1e-3
CD_TOL = 1e-7
MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class LassoFit:
    coefficients: np.ndarray
    lam: float
    intercept: float
    cv_curve: list = field(default_factory=list, repr=False)

    def predict(self, X) -> np.ndarray:
        return np.asarray(X) @ self.coefficients + self.intercept


def lambda_max(X, y) -> float:
    n = X.shape[0]
    return float(np.abs(X.T @ (y - y.mean())).max() / n)


def lambda_grid(lam_max: float, n_lambda: int = N_LAMBDA, ratio: float = LAMBDA_RATIO) -> np.ndarray:
    if lam_max <= 0:
        return np.array([1.0])
    return np.geomspace(lam_max, lam_max * ratio, n_lambda)


def lasso_path(X, y, lambdas, *, tol=CD_TOL, max_sweeps=MAX_SWEEPS, partial=False, backend=None) -> np.ndarray:
    """Coefficients minimizing ``(1/2n)||y - X b||^2 + lam ||b||_1`` for each lambda.

    No intercept and no rescaling: callers center and standardize. The path is
    warm-started, so ``lambdas`` must be strictly decreasing.

    Returns
    -------
    ndarray of shape (len(lambdas), p)

    Raises
    ------
    NonConvergence
        When some lambda needs more than ``max_sweeps`` sweeps' worth of
        coordinate updates; ``index`` names it. With ``partial=True`` the
        converged prefix of the path is returned instead.
    """
    X = np.asfortranarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    lambdas = np.ascontiguousarray(lambdas, dtype=float).ravel()
    if lambdas.size == 0:
        return np.zeros((0, X.shape[1]))
    if np.any(lambdas < 0) or np.any(np.diff(lambdas) >= 0):
        raise InvalidArgument("lambdas must be non-negative and strictly decreasing")
    n, p = X.shape
    col_sq = np.ascontiguousarray((X * X).sum(axis=0) / n)
    coefs = np.zeros((lambdas.size, p))
    sweeps = np.zeros(lambdas.size, dtype=np.intp)
    failed = _backend.get_kernels(backend).lasso_cd(X, y, lambdas, col_sq, tol, max_sweeps, coefs, sweeps)
    if failed >= 0:
        if partial:
            return coefs[:failed]
        raise NonConvergence(f"coordinate descent did not converge at lambda index {failed}", index=int(failed))
    return coefs


def _standardize(X, y):
    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    constant = x_scale <= 1e-12 * (1.0 + np.abs(x_mean))
    x_scale = np.where(constant, 1.0, x_scale)
    Xs = (X - x_mean) / x_scale
    Xs[:, constant] = 0.0
    y_mean = y.mean()
    return Xs, y - y_mean, x_mean, x_scale, y_mean


def _fit_path(X, y, lambdas, backend, partial=False):
    Xs, yc, x_mean, x_scale, y_mean = _standardize(X, y)
    coefs = lasso_path(Xs, yc, lambdas, partial=partial, backend=backend) / x_scale
    intercepts = y_mean - coefs @ x_mean
    return coefs, intercepts


def cv_lasso(X, y, folds: int = 10, rng=None, *, n_lambda: int = N_LAMBDA, backend=None) -> LassoFit:
    """Lasso at the lambda minimizing K-fold cross-validated squared error.

    Columns are standardized internally and coefficients returned on the
    original scale; the intercept is fit by centering. The lambda grid is
    shared across folds and spans ``[1e-3 * lam_max, lam_max]`` of the full
    (standardized) data. If coordinate descent stalls on some fold at small
    lambdas, selection is restricted to the prefix of the grid on which every
    fold and the full-data refit converged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if not 2 <= folds <= n:
        raise InvalidArgument(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    rng = np.random.default_rng(rng)
    Xs, yc, *_ = _standardize(X, y)
    lambdas = lambda_grid(lambda_max(Xs, yc), n_lambda)

    fold_of = np.empty(n, dtype=np.intp)
    fold_of[rng.permutation(n)] = np.arange(n) % folds
    sq_err = np.zeros(lambdas.size)
    usable = lambdas.size
    for k in range(folds):
        test = fold_of == k
        coefs, intercepts = _fit_path(X[~test], y[~test], lambdas[:usable], backend, partial=True)
        usable = coefs.shape[0]
        if usable == 0:
            raise NonConvergence(f"coordinate descent did not converge at lambda index 0 on fold {k}", index=0)
        pred = X[test] @ coefs.T + intercepts
        sq_err[:usable] += ((y[test, None] - pred) ** 2).sum(axis=0)
    lambdas = lambdas[:usable]
    cv_err = sq_err[:usable] / n
    best = int(np.argmin(cv_err))

    coefs, intercepts = _fit_path(X, y, lambdas[: best + 1], backend, partial=True)
    if coefs.shape[0] == 0:
        raise NonConvergence("coordinate descent did not converge at lambda index 0 on the full data", index=0)
    if coefs.shape[0] <= best:
        lambdas, cv_err = lambdas[: coefs.shape[0]], cv_err[: coefs.shape[0]]
        best = int(np.argmin(cv_err))
    return LassoFit(coefs[best], float(lambdas[best]), float(intercepts[best]), list(zip(lambdas.tolist(), cv_err.tolist())))
