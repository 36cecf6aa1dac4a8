"""Compatibility constants for individual variables and for groups.

For a sparsity pattern ``S0`` with signs ``s``, the compatibility constant is::

    phi_cc^2(L) = min |S0| ||X b||^2  over  ||b_{S0^c}||_1 <= L ||b_{S0}||_1,  ||b_{S0}||_1 >= 1

and the group effect compatibility constant replaces the constraints by::

    ||b_{G^c & S0^c}||_1 <= L (||b_{S0}||_1 - ||b_{G & S0^c}||_1),  nu_G(b) >= 1

with ``nu_G(b) = sum_{G & S0} s_k b_k - sum_{G \\ S0} |b_k|``.

Both minimizations are non-convex, but restricted to one sign orthant on
``S0`` (and with ``b_{S0^c} = u - v``, ``u, v >= 0``) they become convex
quadratic programs with the normalization at equality. The estimators
solve one QP per orthant (all orthants when ``|S0| <= 10``, a random sample
otherwise) and report the smallest objective found at a feasible point.
The result is therefore an upper bound on the true constant; it is exact up
to solver tolerance only when every orthant is enumerated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionMismatch, InvalidArgument

MAX_ENUMERATED = 10
DEFAULT_L = 2.0


@dataclass(frozen=True)
class SparsityPattern:
    """Support ``S0`` of the target coefficients and their signs (0-based)."""

    S0: tuple
    signs: tuple

    def __post_init__(self):
        S0 = tuple(int(k) for k in self.S0)
        signs = tuple(int(v) for v in self.signs)
        if len(S0) != len(signs):
            raise InvalidArgument("signs must be given for exactly the members of S0")
        if len(set(S0)) != len(S0) or any(k < 0 for k in S0):
            raise InvalidArgument("S0 must contain distinct non-negative indices")
        if any(v not in (-1, 1) for v in signs):
            raise InvalidArgument("signs must be +1 or -1")
        object.__setattr__(self, "S0", S0)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_beta(cls, beta) -> "SparsityPattern":
        beta = np.asarray(beta, dtype=float).ravel()
        S0 = np.flatnonzero(beta != 0)
        return cls(tuple(S0.tolist()), tuple(np.sign(beta[S0]).astype(int).tolist()))

    def sign_vector(self, p: int) -> np.ndarray:
        self.check(p)
        s = np.zeros(p)
        s[list(self.S0)] = self.signs
        return s

    def check(self, p: int):
        if self.S0 and max(self.S0) >= p:
            raise InvalidArgument(f"S0 index {max(self.S0)} out of range for p={p}")


@dataclass(frozen=True)
class CompatEstimate:
    """Best objective found; an upper bound on the squared constant.

    ``exhaustive`` is true when every sign orthant on ``S0`` was solved.
    ``value`` is ``inf`` when no feasible point exists.
    """

    value: float
    L: float
    restarts: int
    converged: bool
    exhaustive: bool = True
    beta: np.ndarray | None = None
    is_upper_bound: bool = True


def _masks(pattern: SparsityPattern, G, p: int):
    pattern.check(p)
    in_s0 = np.zeros(p, dtype=bool)
    in_s0[list(pattern.S0)] = True
    in_g = np.zeros(p, dtype=bool)
    if G is not None:
        idx = np.asarray(list(G), dtype=np.intp)
        if idx.size and (idx.min() < 0 or idx.max() >= p):
            raise InvalidArgument(f"group indices must lie in [0, {p})")
        in_g[idx] = True
    return in_s0, in_g


def nu_G(pattern: SparsityPattern, G, beta) -> float:
    """``min over the l1 subgradient set at beta*`` of ``sum_{k in G} s_k beta_k``, in closed form."""
    beta = np.asarray(beta, dtype=float).ravel()
    in_s0, in_g = _masks(pattern, G, beta.size)
    s = pattern.sign_vector(beta.size)
    on = in_g & in_s0
    off = in_g & ~in_s0
    return float(s[on] @ beta[on] - np.abs(beta[off]).sum())


def cc_constraints(pattern: SparsityPattern, L: float, beta, tol: float = 0.0) -> bool:
    beta = np.asarray(beta, dtype=float).ravel()
    in_s0, _ = _masks(pattern, None, beta.size)
    a = np.abs(beta[in_s0]).sum()
    return bool(np.abs(beta[~in_s0]).sum() <= L * a + tol and a >= 1.0 - tol)


def gcc_constraints(pattern: SparsityPattern, G, L: float, beta, tol: float = 0.0) -> bool:
    beta = np.asarray(beta, dtype=float).ravel()
    in_s0, in_g = _masks(pattern, G, beta.size)
    a = np.abs(beta[in_s0]).sum()
    inside = np.abs(beta[in_g & ~in_s0]).sum()
    outside = np.abs(beta[~in_g & ~in_s0]).sum()
    return bool(outside <= L * (a - inside) + tol and nu_G(pattern, G, beta) >= 1.0 - tol)


def gcc_feasible_implies_cc_feasible(pattern: SparsityPattern, G, L: float, beta) -> bool:
    """True iff ``beta`` is feasible for the group constant; then checks the individual constraints too.

    Requires ``L >= 1``. Raises ``AssertionError`` if a group-feasible point
    violates the individual constraints (beyond rounding).
    """
    if L < 1:
        raise InvalidArgument("the feasible-set inclusion needs L >= 1")
    if not gcc_constraints(pattern, G, L, beta):
        return False
    scale = 1.0 + float(np.abs(np.asarray(beta, dtype=float)).sum())
    if not cc_constraints(pattern, L, beta, tol=1e-12 * scale):
        raise AssertionError("group-feasible point violates the compatibility constraints")
    return True


def compat_over_candidates(X, pattern: SparsityPattern, candidates, L: float = DEFAULT_L, G=None) -> float:
    """Smallest normalized objective over a fixed pool of directions.

    Each candidate is rescaled to meet the normalization at equality
    (``||b_{S0}||_1 = 1``, or ``nu_G(b) = 1`` when ``G`` is given); candidates
    outside the cone constraint or with a non-positive normalizer are skipped.
    Returns ``inf`` when none qualifies.
    """
    X = np.asarray(X, dtype=float)
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    if cand.shape[1] != X.shape[1]:
        raise DimensionMismatch(f"candidates have {cand.shape[1]} columns, X has {X.shape[1]}")
    k = len(pattern.S0)
    best = math.inf
    for b in cand:
        if G is None:
            norm = float(np.abs(b[list(pattern.S0)]).sum())
            ok = norm > 0 and cc_constraints(pattern, L, b / norm)
        else:
            norm = nu_G(pattern, G, b)
            ok = norm > 0 and gcc_constraints(pattern, G, L, b / norm, tol=1e-12)
        if ok:
            r = X @ (b / norm)
            best = min(best, k * float(r @ r))
    return best


class _OrthantQP:
    """``min z'Qz`` s.t. ``a'z = 1``, ``g'z >= 0``, ``z >= 0`` with ``beta = D z``."""

    def __init__(self, X, pattern, G, L, orthant):
        p = X.shape[1]
        in_s0, in_g = _masks(pattern, G, p)
        s0 = np.asarray(pattern.S0, dtype=np.intp)
        free = np.flatnonzero(~in_s0)
        k, q = s0.size, free.size
        D = np.zeros((p, k + 2 * q))
        D[s0, np.arange(k)] = orthant
        D[free, k + np.arange(q)] = 1.0
        D[free, k + q + np.arange(q)] = -1.0
        self.D = D
        XD = X @ D
        self.Q = XD.T @ XD
        self.weight = float(k)

        mass_s0 = np.concatenate([np.ones(k), np.zeros(2 * q)])
        free_g = np.tile(in_g[free].astype(float), 2)
        free_out = 1.0 - free_g
        self.shrinkable = np.concatenate([np.zeros(k), np.ones(2 * q)])
        if G is None:
            self.a = mass_s0
            self.g = L * mass_s0 - np.concatenate([np.zeros(k), np.ones(2 * q)])
        else:
            sign = np.asarray(pattern.signs, dtype=float)
            self.a = np.concatenate([in_g[s0] * sign * orthant, -free_g])
            self.g = L * mass_s0 - np.concatenate([np.zeros(k), L * free_g + free_out])

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def objective(self, z):
        Qz = self.Q @ z
        return float(z @ Qz), 2.0 * Qz

    def repair(self, z):
        """Move ``z`` onto the feasible set; ``None`` if the normalizer is non-positive."""
        z = np.maximum(z, 0.0)
        gz = self.g @ z
        if gz < 0:
            fixed = self.g @ (z * (1 - self.shrinkable))
            moving = self.g @ (z * self.shrinkable)
            t = max(0.0, fixed / -moving) if moving < 0 else 0.0
            z = z * (1 - self.shrinkable) + t * z * self.shrinkable
        az = self.a @ z
        if az <= 0:
            return None
        return z / az

    def start(self, rng):
        z = rng.exponential(size=self.n)
        z = z * np.where(self.shrinkable > 0, 0.5 * rng.uniform(), 1.0)
        return self.repair(z)

    def _minimize(self, z0):
        return minimize(
            self.objective, z0, jac=True, method="SLSQP",
            bounds=[(0.0, None)] * self.n,
            constraints=[
                {"type": "eq", "fun": lambda z: self.a @ z - 1.0, "jac": lambda z: self.a},
                {"type": "ineq", "fun": lambda z: self.g @ z, "jac": lambda z: self.g},
            ],
            options={"maxiter": 500, "ftol": 1e-14},
        )

    def solve(self, z0):
        res = self._minimize(z0)
        ok = bool(res.success)
        if not ok and res.status == 8:
            # Line-search stall: accept if a restart from here finds nothing better.
            again = self._minimize(res.x)
            ok = again.fun >= res.fun - 1e-10 * (1.0 + abs(res.fun))
            if again.fun < res.fun:
                res = again
        z = self.repair(res.x)
        if z is None:
            return math.inf, None, False
        return self.weight * self.objective(z)[0], self.D @ z, ok


def _orthants(pattern, G, max_enumerated, samples, rng):
    k = len(pattern.S0)
    if k <= max_enumerated:
        return list(itertools.product((1.0, -1.0), repeat=k)), True
    own = tuple(float(v) for v in pattern.signs)
    seen = {own}
    out = [own]
    for _ in range(samples):
        o = tuple(rng.choice((-1.0, 1.0), size=k).tolist())
        if o not in seen:
            seen.add(o)
            out.append(o)
    return out, False


def _gcc_orthant_feasible(pattern, G, orthant) -> bool:
    # nu_G can reach 1 only if some k in G & S0 has its orthant sign equal to sign(beta*_k).
    g = set(G)
    return any(k in g and o == s for k, s, o in zip(pattern.S0, pattern.signs, orthant))


def _estimate(X, pattern, G, L, restarts, rng, max_enumerated, samples) -> CompatEstimate:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidArgument("X must be a 2-d array")
    if L <= 0:
        raise InvalidArgument("L must be positive")
    if restarts < 1:
        raise InvalidArgument("need at least one start per orthant")
    _masks(pattern, G, X.shape[1])
    if not pattern.S0:
        raise InvalidArgument("S0 must be non-empty")
    rng = np.random.default_rng(rng)
    orthants, exhaustive = _orthants(pattern, G, max_enumerated, samples, rng)
    best, best_beta, converged = math.inf, None, True
    for orthant in orthants:
        if G is not None and not _gcc_orthant_feasible(pattern, G, orthant):
            continue
        qp = _OrthantQP(X, pattern, G, L, np.asarray(orthant))
        for _ in range(restarts):
            z0 = qp.start(rng)
            if z0 is None:
                continue
            value, beta, ok = qp.solve(z0)
            converged &= ok
            if value < best:
                best, best_beta = value, beta
    return CompatEstimate(max(best, 0.0), float(L), int(restarts), bool(converged), exhaustive, best_beta)


def estimate_phi_cc(X, pattern: SparsityPattern, L: float = DEFAULT_L, *, restarts: int = 3, rng=None,
                    max_enumerated: int = MAX_ENUMERATED, samples: int = 64) -> CompatEstimate:
    """Upper bound on the squared compatibility constant ``phi_cc^2(L)``.

    ``converged`` is false when some local solve reported failure; the value
    is still the best feasible objective found.
    """
    return _estimate(X, pattern, None, L, restarts, rng, max_enumerated, samples)


def estimate_phi_gcc(X, pattern: SparsityPattern, G, L: float = DEFAULT_L, *, restarts: int = 3, rng=None,
                     max_enumerated: int = MAX_ENUMERATED, samples: int = 64) -> CompatEstimate:
    """Upper bound on the squared group effect compatibility constant ``phi_gcc^2(L, G)``.

    ``value`` is ``inf`` when ``G`` contains no member of ``S0`` (the
    normalization ``nu_G >= 1`` is then unattainable).
    """
    G = sorted({int(j) for j in G})
    return _estimate(X, pattern, G, L, restarts, rng, max_enumerated, samples)
