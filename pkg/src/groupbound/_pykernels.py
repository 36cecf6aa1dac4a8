"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same in-place semantics. The simplex loop reproduces the
compiled arithmetic operation for operation; ``lasso_cd`` uses BLAS dot
products and so agrees with the compiled version only to rounding.
"""

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_CAP = 2


def _pivot(T, leave, enter):
    T[leave] = T[leave] / T[leave, enter]
    T[leave, enter] = 1.0
    f = T[:, enter].copy()
    f[leave] = 0.0
    rows = np.flatnonzero(f != 0.0)
    if rows.size:
        T[rows] -= f[rows, None] * T[leave]
        T[rows, enter] = 0.0


def simplex_iterate(T, basis, max_iter, tol, piv_tol, tie_tol, bland, stall_limit):
    r = T.shape[0] - 1
    ncols = T.shape[1] - 1
    use_bland = bool(bland)
    streak = 0
    it = 0
    while it < max_iter:
        costs = T[r, :ncols]
        if use_bland:
            neg = np.flatnonzero(costs < -tol)
            if neg.size == 0:
                return OPTIMAL, it
            enter = int(neg[0])
        else:
            enter = int(np.argmin(costs))
            if not costs[enter] < -tol:
                return OPTIMAL, it

        col = T[:r, enter]
        rows = np.flatnonzero(col > piv_tol)
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = np.maximum(T[rows, ncols], 0.0) / col[rows]
        best = ratios.min()
        limit = best + tie_tol * (1.0 + best)
        tied = rows[ratios <= limit]
        leave = int(tied[np.argmin(basis[tied])])

        _pivot(T, leave, enter)
        basis[leave] = enter
        it += 1
        if best == 0.0:
            streak += 1
            if streak >= stall_limit:
                use_bland = True
        else:
            streak = 0
    return ITERATION_CAP, it


def _cd_update(cols, resid, beta, col_sq, j, lam, n):
    old = beta[j]
    rho = float(cols[j] @ resid) / n + col_sq[j] * old
    if rho > lam:
        new = (rho - lam) / col_sq[j]
    elif rho < -lam:
        new = (rho + lam) / col_sq[j]
    else:
        new = 0.0
    delta = new - old
    if delta != 0.0:
        resid -= delta * cols[j]
        beta[j] = new
    return abs(delta)


def lasso_cd(X, y, lambdas, col_sq, tol, max_sweeps, coefs, sweeps):
    n, p = X.shape
    beta = np.zeros(p)
    resid = np.array(y, dtype=float)
    failed = -1
    usable = [j for j in range(p) if col_sq[j] > 0.0]
    cols = [X[:, j] for j in range(p)]
    budget = max_sweeps * max(len(usable), 1)
    for l, lam in enumerate(lambdas):
        passes = 0
        work = 0
        done = False
        while not done:
            if work >= budget:
                failed = l if failed < 0 else failed
                break
            max_delta = 0.0
            for j in usable:
                max_delta = max(max_delta, _cd_update(cols, resid, beta, col_sq, j, lam, n))
            active = [j for j in usable if beta[j] != 0.0]
            passes += 1
            work += len(usable)
            if max_delta < tol:
                break
            while True:
                if work >= budget:
                    failed = l if failed < 0 else failed
                    done = True
                    break
                max_delta = 0.0
                for j in active:
                    max_delta = max(max_delta, _cd_update(cols, resid, beta, col_sq, j, lam, n))
                passes += 1
                work += len(active)
                if max_delta < tol:
                    break
        coefs[l] = beta
        sweeps[l] = passes
        if failed >= 0:
            break
    return failed
