"""Brute-force reference implementations used only by the tests."""

import itertools

import numpy as np


def vertex_enumeration(c, A, b, tol=1e-9):
    """Minimum of ``c @ x`` over ``A x = b, x >= 0`` by enumerating basic feasible solutions.

    Valid when the minimum is finite. Returns ``(value, x)``, or ``(None, None)``
    when no basic feasible solution exists.
    """
    c, A, b = (np.asarray(v, dtype=float) for v in (c, A, b))
    r, d = A.shape
    best, best_x = None, None
    for k in range(0, min(r, d) + 1):
        for cols in itertools.combinations(range(d), k):
            cols = list(cols)
            if k:
                sub = A[:, cols]
                if np.linalg.matrix_rank(sub, tol=1e-10) < k:
                    continue
                xs, *_ = np.linalg.lstsq(sub, b, rcond=None)
            else:
                xs = np.zeros(0)
            x = np.zeros(d)
            x[cols] = xs
            if np.abs(A @ x - b).max(initial=0.0) > tol * (1 + np.abs(b).max(initial=0.0)):
                continue
            if np.any(x < -tol):
                continue
            val = float(c @ x)
            if best is None or val < best:
                best, best_x = val, x
    return best, best_x


def bp_enumeration(X, y):
    """``min ||b||_1`` s.t. ``X b = y`` via the split LP and vertex enumeration."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    value, z = vertex_enumeration(np.ones(2 * d), np.hstack([X, -X]), y)
    if value is None:
        return None, None
    return value, z[:d] - z[d:]


def naive_average_linkage(D):
    """Textbook O(p^3) agglomeration; returns merges as ``(members_a, members_b, height)``."""
    D = np.asarray(D, dtype=float)
    clusters = [(j,) for j in range(D.shape[0])]
    merges = []
    while len(clusters) > 1:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                a, b = clusters[i], clusters[j]
                h = D[np.ix_(a, b)].mean()
                if best is None or h < best[0] - 1e-14:
                    best = (h, i, j)
        h, i, j = best
        a, b = clusters[i], clusters[j]
        merges.append((a, b, h))
        clusters = [c for k, c in enumerate(clusters) if k not in (i, j)] + [tuple(sorted(a + b))]
    return merges


def lasso_single(x, y, lam):
    """Closed-form minimizer of ``(1/2n)||y - x b||^2 + lam |b|`` for one column."""
    n = x.size
    rho = x @ y / n
    sq = x @ x / n
    return np.sign(rho) * max(abs(rho) - lam, 0.0) / sq
