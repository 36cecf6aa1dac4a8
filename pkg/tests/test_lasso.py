import numpy as np
import pytest

from groupbound.errors import InvalidArgument, NonConvergence
from groupbound.lasso import _standardize, cv_lasso, lambda_grid, lambda_max, lasso_path

from oracles import lasso_single


def _kkt_gap(X, y, beta, lam):
    n = X.shape[0]
    g = X.T @ (y - X @ beta) / n
    zero = beta == 0
    gap_zero = np.maximum(np.abs(g[zero]) - lam, 0.0).max(initial=0.0)
    gap_nz = np.abs(g[~zero] - lam * np.sign(beta[~zero])).max(initial=0.0)
    return max(gap_zero, gap_nz)


def test_above_lambda_max_is_zero(rng):
    X, *_ = _standardize(rng.standard_normal((30, 8)), np.zeros(30))
    y = rng.standard_normal(30)
    y -= y.mean()
    lm = lambda_max(X, y)
    coefs = lasso_path(X, y, [2 * lm, lm])
    np.testing.assert_array_equal(coefs, 0.0)


def test_zero_penalty_is_least_squares(backend, rng):
    X = rng.standard_normal((40, 4))
    y = X @ [1.0, -2.0, 0.5, 0.0] + 0.1 * rng.standard_normal(40)
    coefs = lasso_path(X, y, [1.0, 0.1, 0.0], tol=1e-12, backend=backend)
    ls = np.linalg.solve(X.T @ X, X.T @ y)
    np.testing.assert_allclose(coefs[-1], ls, atol=1e-8)


def test_single_column_closed_form(backend, rng):
    x = rng.standard_normal(25)
    y = 2.0 * x + rng.standard_normal(25)
    lams = np.geomspace(3.0, 0.01, 15)
    coefs = lasso_path(x[:, None], y, lams, backend=backend)
    expected = [lasso_single(x, y, lam) for lam in lams]
    np.testing.assert_allclose(coefs[:, 0], expected, atol=1e-9)


def test_kkt_on_correlated_path(backend):
    rng = np.random.default_rng(3)
    z = rng.standard_normal((30, 1))
    X = 0.9 * z + 0.3 * rng.standard_normal((30, 12))
    y = X[:, 0] - X[:, 3] + 0.2 * rng.standard_normal(30)
    X, y, *_ = _standardize(X, y)
    lams = lambda_grid(lambda_max(X, y), 40)
    coefs = lasso_path(X, y, lams, backend=backend)
    for beta, lam in zip(coefs, lams):
        assert _kkt_gap(X, y, beta, lam) <= 1e-6


def test_backends_agree(rng):
    X, y, *_ = _standardize(rng.standard_normal((40, 30)), rng.standard_normal(40))
    lams = lambda_grid(lambda_max(X, y), 25)
    a = lasso_path(X, y, lams, backend="python")
    try:
        b = lasso_path(X, y, lams, backend="cython")
    except ImportError:
        pytest.skip("compiled extension not built")
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_backends_agree_on_truncated_path(rng):
    # p > n: tiny lambdas approach interpolation and may exhaust the sweep budget
    X, y, *_ = _standardize(rng.standard_normal((12, 30)), rng.standard_normal(12))
    lams = lambda_grid(lambda_max(X, y), 20)
    a = lasso_path(X, y, lams, max_sweeps=300, partial=True, backend="python")
    try:
        b = lasso_path(X, y, lams, max_sweeps=300, partial=True, backend="cython")
    except ImportError:
        pytest.skip("compiled extension not built")
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_objective_decreases_along_sweeps(rng):
    # more permitted work can only lower the objective at a fixed lambda
    X, y, *_ = _standardize(rng.standard_normal((15, 20)), rng.standard_normal(15))
    lam = 0.05 * lambda_max(X, y)

    def objective(b):
        r = y - X @ b
        return r @ r / (2 * 15) + lam * np.abs(b).sum()

    values = []
    for sweeps in (1, 2, 4, 8, 16, 10_000):
        coefs = lasso_path(X, y, [lam], max_sweeps=sweeps, partial=True)
        values.append(objective(coefs[0]) if coefs.shape[0] else np.inf)
    finite = [v for v in values if np.isfinite(v)]
    assert finite == sorted(finite, reverse=True)


def test_nonconvergence_reports_index(rng):
    X, y, *_ = _standardize(rng.standard_normal((10, 30)), rng.standard_normal(10))
    lams = lambda_grid(lambda_max(X, y), 30)
    with pytest.raises(NonConvergence) as info:
        lasso_path(X, y, lams, max_sweeps=1, tol=1e-15)
    assert info.value.index is not None
    partial = lasso_path(X, y, lams, max_sweeps=1, tol=1e-15, partial=True)
    assert partial.shape[0] == info.value.index


def test_lambda_validation(rng):
    X = rng.standard_normal((5, 2))
    with pytest.raises(InvalidArgument):
        lasso_path(X, np.ones(5), [0.1, 0.2])
    assert lasso_path(X, np.ones(5), []).shape == (0, 2)


def test_constant_column_stays_zero(rng):
    X = rng.standard_normal((30, 4))
    X[:, 2] = 3.0
    y = X[:, 0] + 0.1 * rng.standard_normal(30)
    fit = cv_lasso(X, y, folds=5, rng=0)
    assert fit.coefficients[2] == 0.0


def test_strong_single_predictor():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((60, 10))
    y = 5.0 * X[:, 0] + 0.01 * rng.standard_normal(60)
    fit = cv_lasso(X, y, rng=1)
    assert fit.coefficients[0] == pytest.approx(5.0, rel=0.1)
    assert fit.lam in [lam for lam, _ in fit.cv_curve]
    np.testing.assert_allclose(fit.predict(X), X @ fit.coefficients + fit.intercept)


def test_pure_noise_is_sparse():
    rng = np.random.default_rng(2)
    n, p = 30, 60
    X = rng.standard_normal((n, p))
    y = 10.0 * rng.standard_normal(n)
    fit = cv_lasso(X, y, rng=3)
    assert np.count_nonzero(fit.coefficients == 0) >= p - n


def test_cv_deterministic_and_duplicated_rows(rng):
    X = rng.standard_normal((20, 6))
    y = X[:, 1] + 0.5 * rng.standard_normal(20)
    a = cv_lasso(X, y, folds=4, rng=5)
    b = cv_lasso(X, y, folds=4, rng=5)
    assert a.lam == b.lam
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    X2, y2 = np.vstack([X, X]), np.concatenate([y, y])
    c = cv_lasso(X2, y2, folds=4, rng=5)
    d = cv_lasso(X2, y2, folds=4, rng=5)
    assert c.lam == d.lam


def test_cv_validation(rng):
    with pytest.raises(InvalidArgument):
        cv_lasso(rng.standard_normal((5, 2)), np.ones(5), folds=6)
    with pytest.raises(InvalidArgument):
        cv_lasso(rng.standard_normal((5, 2)), np.ones(5), folds=1)


def test_original_scale_intercept(rng):
    X = 10.0 + 3.0 * rng.standard_normal((50, 3))
    y = 7.0 + 2.0 * X[:, 0] + 0.01 * rng.standard_normal(50)
    fit = cv_lasso(X, y, folds=5, rng=0)
    assert fit.coefficients[0] == pytest.approx(2.0, rel=0.02)
    assert np.abs(fit.predict(X) - y).max() < 0.5
