"""Lower confidence bounds for ``||beta*_G||_1`` from one data split.

Given an initial estimate fitted on other rows, the held-out rows are
projected to ``s`` dimensions, a random noise hull of radius
``mu = 3 ||A R||_2`` is drawn, basis pursuit is solved at every hull vertex,
and the bound for a group ``G`` is the smallest ``||beta_G||_1`` over the
linear relaxation::

    sum(gamma) = 1,  gamma >= 0
    ||beta||_1 <= sum_k gamma_k l_k
    AX beta = AY + mu E gamma

where ``l_k`` is the basis-pursuit norm at vertex ``k``. The relaxation
does not depend on ``G``, so one context serves any number of groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis_pursuit import RegressionData, basis_pursuit
from .errors import DimensionMismatch, InfeasibleSystem, InvalidArgument
from .lp import LinearProgram, LpStatus, solve_lp
from .noise import SCALE_CONSTANT, CalibrationCache, NoiseRegion, sample_region
from .projection import Projection, build_projection, default_dimension

REJECT_TOL = 1e-7


@dataclass(frozen=True)
class GroupBound:
    group: tuple
    alpha: float
    lower_bound: float
    rejected: bool

    @classmethod
    def from_value(cls, group, alpha, value):
        value = float(value)
        bound = value if value > REJECT_TOL else 0.0
        return cls(tuple(group), float(alpha), bound, bound > REJECT_TOL)


@dataclass(frozen=True)
class SplitContext:
    """Everything needed to evaluate group bounds on one split; immutable once built."""

    AX: np.ndarray
    AY: np.ndarray
    region: NoiseRegion
    vertex_norms: np.ndarray
    alpha_split: float
    projection: Projection | None = None
    vertex_solutions: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        s, p = self.AX.shape
        if self.region.dim != s:
            raise DimensionMismatch(f"region dimension {self.region.dim} != projected rows {s}")
        m2 = self.region.E.shape[1]
        A = np.zeros((s + 2, 2 * p + m2 + 1))
        A[:s, :p] = self.AX
        A[:s, p : 2 * p] = -self.AX
        A[:s, 2 * p : 2 * p + m2] = -self.region.mu * self.region.E
        A[s, 2 * p : 2 * p + m2] = 1.0
        A[s + 1, : 2 * p] = 1.0
        A[s + 1, 2 * p : 2 * p + m2] = -self.vertex_norms
        A[s + 1, -1] = 1.0
        b = np.concatenate([self.AY, [1.0, 0.0]])
        A.flags.writeable = False
        object.__setattr__(self, "_A", A)
        object.__setattr__(self, "_b", b)

    @property
    def p(self) -> int:
        return self.AX.shape[1]

    @property
    def s(self) -> int:
        return self.AX.shape[0]

    @property
    def mu(self) -> float:
        return self.region.mu

    @property
    def m(self) -> int:
        return self.region.m

    def relaxation_program(self, objective) -> LinearProgram:
        """The relaxed feasible set with a caller-supplied objective over ``(b+, b-, gamma, slack)``."""
        return LinearProgram(objective, self._A, self._b)


def normalize_group(G, p: int) -> tuple:
    idx = sorted({int(j) for j in G})
    if not idx:
        raise InvalidArgument("group must be non-empty")
    if idx[0] < 0 or idx[-1] >= p:
        raise InvalidArgument(f"group indices must lie in [0, {p}), got {idx[0]}..{idx[-1]}")
    return tuple(idx)


def build_split_context(data: RegressionData, beta_hat, alpha_split: float, s: int | None,
                        calibration: CalibrationCache, rng, *, intercept: float = 0.0,
                        project: bool = True, scale_constant: float = SCALE_CONSTANT,
                        keep_solutions: bool = False, backend=None) -> SplitContext:
    """Run the per-split preprocessing on held-out rows ``data``.

    ``beta_hat`` (and ``intercept``) must come from disjoint rows. With
    ``project=False`` the full ``n`` rows are used and the hull dimension is
    ``n``; otherwise rows are projected onto ``s`` directions, the first along
    the fitted signal, and the hull dimension is ``s``.

    Raises
    ------
    InfeasibleSystem
        When basis pursuit fails at some vertex (``exc.vertex`` names it),
        typically because the projected design is rank deficient.
    """
    if not 0.0 < alpha_split < 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha_split}")
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    if beta_hat.size != data.p:
        raise DimensionMismatch(f"beta_hat has length {beta_hat.size}, data has p={data.p}")
    rng = np.random.default_rng(rng)
    signal = data.X @ beta_hat + intercept

    if project:
        s = default_dimension(data.p, data.n) if s is None else int(s)
        proj = build_projection(signal, s, rng)
        AX, AY = proj.A @ data.X, proj.A @ data.Y
    else:
        proj = None
        AX, AY = data.X.copy(), data.Y.copy()
    resid = data.Y - signal
    if proj is not None:
        resid = proj.A @ resid
    mu = scale_constant * float(np.linalg.norm(resid))
    dim = AX.shape[0]
    m = calibration.lookup(dim, alpha_split)
    region = sample_region(dim, m, mu, rng)

    norms = np.empty(2 * m)
    sols = np.empty((2 * m, data.p)) if keep_solutions else None
    for k in range(2 * m):
        try:
            bp = basis_pursuit(AX, AY + mu * region.E[:, k], backend=backend)
        except InfeasibleSystem as exc:
            raise InfeasibleSystem(f"basis pursuit infeasible at vertex {k}: {exc}", vertex=k) from exc
        norms[k] = bp.norm
        if sols is not None:
            sols[k] = bp.coef
    return SplitContext(AX, AY, region, norms, float(alpha_split), proj, sols)


def group_objective(ctx: SplitContext, G) -> np.ndarray:
    p = ctx.p
    c = np.zeros(2 * p + 2 * ctx.m + 1)
    idx = np.asarray(G, dtype=np.intp)
    c[idx] = 1.0
    c[p + idx] = 1.0
    return c


def lower_bound(ctx: SplitContext, G, *, backend=None) -> GroupBound:
    """Smallest ``||beta_G||_1`` over the relaxed set; 0 (not rejected) below ``REJECT_TOL``."""
    G = normalize_group(G, ctx.p)
    sol = solve_lp(ctx.relaxation_program(group_objective(ctx, G)), backend=backend)
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleSystem(f"group-bound program is {sol.status.value}; vertex solves were feasible")
    return GroupBound.from_value(G, ctx.alpha_split, sol.value)


def bound_many(ctx: SplitContext, groups: Sequence, *, backend=None) -> list[GroupBound]:
    return [lower_bound(ctx, G, backend=backend) for G in groups]
