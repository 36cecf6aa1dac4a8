"""Multi-split aggregation of group bounds and top-down testing of cluster trees."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import squareform

from .basis_pursuit import RegressionData
from .errors import GroupBoundError, InvalidArgument
from .group_bound import REJECT_TOL, GroupBound, SplitContext, build_split_context, lower_bound, normalize_group
from .lasso import cv_lasso
from .noise import CalibrationCache, _as_seed

DEFAULT_SPLITS = 11
DEFAULT_EPSILON = 0.1
CV_FOLDS = 10


@dataclass(frozen=True)
class AggregatedBound(GroupBound):
    per_split_bounds: tuple = ()


def quantile_index(K: int, epsilon: float) -> int:
    """1-based rank ``ceil((1 - epsilon) K)`` of the aggregated order statistic."""
    return min(K, max(1, math.ceil((1.0 - epsilon) * K - 1e-9)))


def aggregate(values: Sequence[float], epsilon: float) -> float:
    ordered = sorted(values)
    return ordered[quantile_index(len(ordered), epsilon) - 1]


class SplitError(GroupBoundError):
    def __init__(self, k, exc):
        super().__init__(f"split {k} failed: {type(exc).__name__}: {exc}")
        self.split = k
        self.cause = exc


@dataclass
class SplitPlan:
    """``K`` random halvings of ``n`` rows plus per-split random streams.

    Split ``k`` uses streams derived from ``(seed, k)`` only, so results do not
    depend on the order or thread in which splits are processed.
    """

    n: int
    K: int
    epsilon: float
    alpha: float
    seed: int
    splits: list = field(default_factory=list)

    def __post_init__(self):
        if self.K < 1:
            raise InvalidArgument("need at least one split")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidArgument(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgument(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n < 4:
            raise InvalidArgument(f"need at least 4 observations to split, got {self.n}")
        if not self.splits:
            half = self.n // 2
            for k in range(self.K):
                perm = self.stream(k, 0).permutation(self.n)
                self.splits.append((np.sort(perm[:half]), np.sort(perm[half:])))

    @property
    def alpha_split(self) -> float:
        return self.alpha * self.epsilon

    def stream(self, k: int, purpose: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(k, purpose)))


class SplitRunner:
    """Fits the initial estimator on each split and builds contexts lazily per level.

    Contexts at different levels of the same split share the projection and
    ``mu``; their hull vertices are nested prefixes of one random stream.
    """

    def __init__(self, data: RegressionData, plan: SplitPlan, s: int | None, calibration: CalibrationCache,
                 *, threads: int = 1, backend=None):
        self.data, self.plan, self.s = data, plan, s
        self.calibration = calibration
        self.threads = max(1, int(threads))
        self.backend = backend
        self._fits: dict[int, tuple] = {}
        self._contexts: dict[tuple[int, float], SplitContext] = {}

    def _fit(self, k):
        if k not in self._fits:
            est_rows, _ = self.plan.splits[k]
            est = self.data.subset(est_rows)
            folds = min(CV_FOLDS, est.n)
            self._fits[k] = cv_lasso(est.X, est.Y, folds=folds, rng=self.plan.stream(k, 1), backend=self.backend)
        return self._fits[k]

    def context(self, k: int, alpha_split: float) -> SplitContext:
        key = (k, round(alpha_split, 15))
        if key not in self._contexts:
            try:
                fit = self._fit(k)
                test = self.data.subset(self.plan.splits[k][1])
                self._contexts[key] = build_split_context(
                    test, fit.coefficients, alpha_split, self.s, self.calibration,
                    self.plan.stream(k, 2), intercept=fit.intercept, backend=self.backend,
                )
            except GroupBoundError as exc:
                raise SplitError(k, exc) from exc
        return self._contexts[key]

    def contexts(self, alpha_split: float) -> list[SplitContext]:
        ks = range(self.plan.K)
        if self.threads == 1:
            return [self.context(k, alpha_split) for k in ks]
        # Lasso fits and LP kernels release the GIL; results are keyed by split, not thread.
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(lambda k: self.context(k, alpha_split), ks))

    def bound(self, G, alpha: float) -> AggregatedBound:
        per_split = tuple(
            lower_bound(ctx, G, backend=self.backend).lower_bound
            for ctx in self.contexts(alpha * self.plan.epsilon)
        )
        value = aggregate(per_split, self.plan.epsilon)
        return AggregatedBound(tuple(G), float(alpha), value, value > REJECT_TOL, per_split)


def aggregate_bounds(data: RegressionData, groups: Sequence, K: int = DEFAULT_SPLITS, epsilon: float = DEFAULT_EPSILON,
                     alpha: float = 0.05, s: int | None = None, rng=None, *, calibration: CalibrationCache | None = None,
                     threads: int = 1, backend=None) -> list[AggregatedBound]:
    """Bounds for each group aggregated over ``K`` random splits.

    Each split fits a cross-validated Lasso on one half and evaluates the
    bound on the other at level ``alpha * epsilon``; the reported bound is the
    ``ceil((1 - epsilon) K)``-th smallest per-split bound. A failing split
    raises :class:`SplitError` rather than being dropped.
    """
    groups = [normalize_group(G, data.p) for G in groups]
    plan = SplitPlan(data.n, K, epsilon, alpha, _as_seed(rng))
    runner = SplitRunner(data, plan, s, calibration or CalibrationCache(), threads=threads, backend=backend)
    if not groups:
        return []
    return [runner.bound(G, alpha) for G in groups]


@dataclass
class ClusterNode:
    id: int
    members: tuple
    height: float
    children: list = field(default_factory=list)
    bound: AggregatedBound | None = None
    pruned: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def to_json(self, index_base: int = 1) -> dict:
        nodes = []
        for node in self.walk():
            rec = {
                "id": node.id,
                "members": [j + index_base for j in node.members],
                "height": node.height,
                "children": [c.id for c in node.children],
                "pruned": node.pruned,
                "tested": node.bound is not None,
                "lower_bound": None,
                "rejected": None,
                "per_split_bounds": None,
            }
            if node.bound is not None:
                rec["lower_bound"] = node.bound.lower_bound
                rec["rejected"] = node.bound.rejected
                rec["per_split_bounds"] = list(node.bound.per_split_bounds)
            nodes.append(rec)
        return {"root": self.id, "nodes": nodes}


def correlation_distance(X) -> np.ndarray:
    """``1 - |corr|`` between columns; zero-variance columns get correlation 0."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0)
    norms = np.linalg.norm(Xc, axis=0)
    const = norms <= 1e-12 * (1.0 + np.abs(X).max(axis=0))
    scale = np.where(const, 1.0, norms)
    Z = Xc / scale
    Z[:, const] = 0.0
    corr = np.clip(Z.T @ Z, -1.0, 1.0)
    dist = 1.0 - np.abs(corr)
    np.fill_diagonal(dist, 0.0)
    return np.maximum(dist, 0.0)


def average_linkage_tree(X) -> ClusterNode:
    """Average-linkage dendrogram of the columns of ``X`` under ``1 - |corr|``.

    Leaves have ids ``0..p-1``; merge ``i`` creates node ``p + i``.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1] if X.ndim == 2 else 0
    if p < 2:
        raise InvalidArgument(f"need at least two variables to cluster, got {p}")
    Z = linkage(squareform(correlation_distance(X), checks=False), method="average")
    nodes = [ClusterNode(j, (j,), 0.0) for j in range(p)]
    for i, (a, b, h, _) in enumerate(Z):
        left, right = nodes[int(a)], nodes[int(b)]
        members = tuple(sorted(left.members + right.members))
        height = max(float(h), left.height, right.height)
        nodes.append(ClusterNode(p + i, members, height, [left, right]))
    return nodes[-1]


def cluster_test(data: RegressionData, tree: ClusterNode, alpha: float = 0.05, K: int = DEFAULT_SPLITS,
                 epsilon: float = DEFAULT_EPSILON, s: int | None = None, rng=None, *,
                 calibration: CalibrationCache | None = None, prune: bool = True,
                 multiplicity: str | None = None, threads: int = 1, backend=None) -> ClusterNode:
    """Test tree nodes from the root down, descending only below rejected nodes.

    Per-split contexts are built once and shared by every node. With
    ``multiplicity="bonferroni"`` a node ``G`` is tested at ``alpha |G| / p``.
    Untested nodes are marked ``pruned``. ``prune=False`` tests every node.
    """
    if multiplicity not in (None, "none", "bonferroni"):
        raise InvalidArgument(f"unknown multiplicity scheme {multiplicity!r}")
    p = data.p
    if set(tree.members) - set(range(p)):
        raise InvalidArgument("tree members exceed the number of columns")
    plan = SplitPlan(data.n, K, epsilon, alpha, _as_seed(rng))
    runner = SplitRunner(data, plan, s, calibration or CalibrationCache(), threads=threads, backend=backend)

    for node in tree.walk():
        node.bound, node.pruned = None, False
    queue = [tree]
    while queue:
        node = queue.pop(0)
        level = alpha * len(node.members) / p if multiplicity == "bonferroni" else alpha
        node.bound = runner.bound(node.members, level)
        if node.bound.rejected or not prune:
            queue.extend(node.children)
        else:
            for child in node.children:
                for sub in child.walk():
                    sub.pruned = True
    return tree
