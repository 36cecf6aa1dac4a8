# cython: language_level=3
"""Compiled inner loops: tableau simplex pivoting and Lasso coordinate descent.

Both functions mutate their array arguments in place and release the GIL.
``groupbound._pykernels`` holds the numpy twins; the simplex kernels perform
the same floating-point operations in the same order, so the two backends
return bitwise-identical tableaus.
"""

from libc.math cimport fabs

import numpy as np

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 1
    ITERATION_CAP = 2


cdef inline void _pivot(double[:, ::1] T, Py_ssize_t leave, Py_ssize_t enter) noexcept nogil:
    cdef Py_ssize_t nrow = T.shape[0]
    cdef Py_ssize_t width = T.shape[1]
    cdef Py_ssize_t i, k
    cdef double piv = T[leave, enter]
    cdef double f
    for k in range(width):
        T[leave, k] = T[leave, k] / piv
    T[leave, enter] = 1.0
    for i in range(nrow):
        if i == leave:
            continue
        f = T[i, enter]
        if f != 0.0:
            for k in range(width):
                T[i, k] = T[i, k] - f * T[leave, k]
            T[i, enter] = 0.0


def simplex_iterate(double[:, ::1] T, Py_ssize_t[::1] basis, Py_ssize_t max_iter,
                    double tol, double piv_tol, double tie_tol, bint bland,
                    Py_ssize_t stall_limit):
    """Run primal simplex pivots on tableau ``T`` until optimal or unbounded.

    Rows ``0..r-1`` of ``T`` are constraints, row ``r`` holds reduced costs and
    the last column is the right-hand side. Returns ``(status, iterations)``.
    """
    cdef Py_ssize_t r = T.shape[0] - 1
    cdef Py_ssize_t ncols = T.shape[1] - 1
    cdef Py_ssize_t it = 0
    cdef Py_ssize_t j, i, enter, leave, streak = 0
    cdef double best, a, ratio, rhs, limit
    cdef bint use_bland = bland
    cdef int status = ITERATION_CAP
    with nogil:
        while it < max_iter:
            enter = -1
            if use_bland:
                for j in range(ncols):
                    if T[r, j] < -tol:
                        enter = j
                        break
            else:
                best = -tol
                for j in range(ncols):
                    if T[r, j] < best:
                        best = T[r, j]
                        enter = j
            if enter < 0:
                status = OPTIMAL
                break

            best = -1.0
            for i in range(r):
                a = T[i, enter]
                if a > piv_tol:
                    rhs = T[i, ncols]
                    if rhs < 0.0:
                        rhs = 0.0
                    ratio = rhs / a
                    if best < 0.0 or ratio < best:
                        best = ratio
            if best < 0.0:
                status = UNBOUNDED
                break
            limit = best + tie_tol * (1.0 + best)
            leave = -1
            for i in range(r):
                a = T[i, enter]
                if a > piv_tol:
                    rhs = T[i, ncols]
                    if rhs < 0.0:
                        rhs = 0.0
                    ratio = rhs / a
                    if ratio <= limit and (leave < 0 or basis[i] < basis[leave]):
                        leave = i

            _pivot(T, leave, enter)
            basis[leave] = enter
            it += 1
            if best == 0.0:
                streak += 1
                if streak >= stall_limit:
                    use_bland = True
            else:
                streak = 0
    return status, it


cdef inline double _cd_update(double[::1, :] X, double[::1] resid, double[::1] beta,
                             double[::1] col_sq, Py_ssize_t j, double lam, double inv_n) noexcept nogil:
    cdef Py_ssize_t i, n = X.shape[0]
    cdef double old = beta[j]
    cdef double dot = 0.0
    cdef double rho, new, delta
    for i in range(n):
        dot = dot + X[i, j] * resid[i]
    rho = dot * inv_n + col_sq[j] * old
    if rho > lam:
        new = (rho - lam) / col_sq[j]
    elif rho < -lam:
        new = (rho + lam) / col_sq[j]
    else:
        new = 0.0
    delta = new - old
    if delta != 0.0:
        for i in range(n):
            resid[i] = resid[i] - delta * X[i, j]
        beta[j] = new
    return fabs(delta)


def lasso_cd(double[::1, :] X, double[::1] y, double[::1] lambdas, double[::1] col_sq,
             double tol, Py_ssize_t max_sweeps, double[:, ::1] coefs,
             Py_ssize_t[::1] sweeps):
    """Warm-started cyclic coordinate descent along a descending lambda path.

    Minimizes ``(1/2n)||y - X b||^2 + lam ||b||_1`` for each ``lam``; ``col_sq``
    holds ``x_j'x_j / n``. Alternates full sweeps with sweeps over the nonzero
    coordinates only; a lambda is done when a full sweep moves no coefficient
    by ``tol`` or more. The work per lambda is capped at ``max_sweeps`` full
    sweeps' worth of coordinate updates. Fills ``coefs`` (one row per lambda)
    and ``sweeps`` (passes of either kind). Stops at the first lambda that
    hits the cap and returns its index; returns -1 when all converged.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t nl = lambdas.shape[0]
    cdef Py_ssize_t j, a, l, passes, n_active, n_usable = 0
    cdef long long work, budget
    cdef double inv_n = 1.0 / n
    cdef double lam, delta, max_delta
    cdef Py_ssize_t failed = -1
    cdef bint done
    cdef double[::1] beta = np.zeros(p)
    cdef double[::1] resid = y.copy()
    cdef Py_ssize_t[::1] active = np.empty(p, dtype=np.intp)
    for j in range(p):
        if col_sq[j] > 0.0:
            n_usable += 1
    budget = <long long> max_sweeps * (n_usable if n_usable > 0 else 1)
    with nogil:
        for l in range(nl):
            lam = lambdas[l]
            passes = 0
            work = 0
            done = False
            while not done:
                if work >= budget:
                    if failed < 0:
                        failed = l
                    break
                max_delta = 0.0
                n_active = 0
                for j in range(p):
                    if col_sq[j] <= 0.0:
                        continue
                    delta = _cd_update(X, resid, beta, col_sq, j, lam, inv_n)
                    if delta > max_delta:
                        max_delta = delta
                    if beta[j] != 0.0:
                        active[n_active] = j
                        n_active += 1
                passes += 1
                work += n_usable
                if max_delta < tol:
                    break
                while True:
                    if work >= budget:
                        if failed < 0:
                            failed = l
                        done = True
                        break
                    max_delta = 0.0
                    for a in range(n_active):
                        delta = _cd_update(X, resid, beta, col_sq, active[a], lam, inv_n)
                        if delta > max_delta:
                            max_delta = delta
                    passes += 1
                    work += n_active
                    if max_delta < tol:
                        break
            for j in range(p):
                coefs[l, j] = beta[j]
            sweeps[l] = passes
            if failed >= 0:
                break
    return failed
