"""Block-correlated Gaussian designs and rejection-frequency experiments."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .aggregation import DEFAULT_EPSILON, DEFAULT_SPLITS, aggregate_bounds
from .basis_pursuit import RegressionData
from .errors import CovarianceNotPSD, InvalidArgument, UnknownSetting
from .noise import CalibrationCache, _as_seed

# name: (p, n, B, rho_w, rho_b, tau)
SETTINGS = {
    "i": (200, 50, 10, 0.99, 0.00, 0.5),
    "ii": (200, 200, 20, 0.999, 0.00, 1.0),
    "iii": (1000, 300, 50, 0.8, 0.10, 2.0),
    "iv": (200, 100, 50, 0.99, 0.10, 2.0),
    "v": (300, 200, 100, 0.999, 0.00, 1.0),
    "vi": (300, 200, 100, 0.995, 0.50, 1.0),
}

SIGMA_GRID = (0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


@dataclass(frozen=True)
class SimSetting:
    p: int
    n: int
    B: int
    rho_w: float
    rho_b: float
    tau: float
    sigma: float
    name: str = ""

    def __post_init__(self):
        if self.B <= 0 or self.B % 2 or self.B > self.p:
            raise InvalidArgument(f"block size must be even and at most p, got B={self.B}, p={self.p}")
        if not (0.0 <= self.rho_w < 1.0 and 0.0 <= self.rho_b < 1.0):
            raise InvalidArgument("correlations must lie in [0, 1)")
        if self.tau <= 0 or self.sigma < 0:
            raise InvalidArgument("tau must be positive and sigma non-negative")

    def scaled(self, p: int | None = None, n: int | None = None) -> "SimSetting":
        return replace(self, p=p or self.p, n=n or self.n)

    def covariance(self) -> np.ndarray:
        block = np.arange(self.p) // self.B
        same = block[:, None] == block[None, :]
        cov = np.where(same, self.rho_w, self.rho_b)
        np.fill_diagonal(cov, 1.0)
        return cov

    def beta_star(self) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[1 : self.B : 2] = self.tau  # 1-based variables 2, 4, ..., B
        return beta

    def default_groups(self) -> dict[str, tuple]:
        beta = self.beta_star()
        return {
            "single_2": (1,),
            "block1_half": tuple(range(self.B // 2)),
            "block1": tuple(range(self.B)),
            "all": tuple(range(self.p)),
            "null": tuple(np.flatnonzero(beta == 0).tolist()),
        }


def build_setting(name: str, sigma: float = 1.0) -> SimSetting:
    try:
        p, n, B, rho_w, rho_b, tau = SETTINGS[name]
    except KeyError:
        raise UnknownSetting(f"unknown setting {name!r}; choose from {', '.join(SETTINGS)}") from None
    return SimSetting(p, n, B, rho_w, rho_b, tau, float(sigma), name)


def _cholesky(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * np.trace(cov) / cov.shape[0]
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise CovarianceNotPSD("block covariance is not positive semidefinite") from exc


def simulate_dataset(setting: SimSetting, rng) -> tuple[RegressionData, np.ndarray]:
    """Draw ``n`` rows from ``N_p(0, Sigma)`` and ``Y = X beta* + sigma * noise``."""
    rng = np.random.default_rng(rng)
    L = _cholesky(setting.covariance())
    X = rng.standard_normal((setting.n, setting.p)) @ L.T
    beta = setting.beta_star()
    Y = X @ beta
    if setting.sigma > 0:
        Y = Y + setting.sigma * rng.standard_normal(setting.n)
    return RegressionData(X, Y), beta


@dataclass(frozen=True)
class GroupResult:
    group_id: str
    sims: int
    rejections: int
    mean_bound: float

    @property
    def rate(self) -> float:
        return self.rejections / self.sims


@dataclass
class ExperimentResult:
    setting: SimSetting
    groups: dict
    results: list
    seed: int
    bounds: np.ndarray = None  # sims x groups

    def rows(self):
        for r in self.results:
            yield {
                "setting": self.setting.name or "custom",
                "sigma": self.setting.sigma,
                "group_id": r.group_id,
                "sims": r.sims,
                "rejections": r.rejections,
                "rate": r.rate,
                "mean_bound": r.mean_bound,
            }


CSV_FIELDS = ["setting", "sigma", "group_id", "sims", "rejections", "rate", "mean_bound"]


def write_csv(results: Sequence[ExperimentResult], fh):
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        for row in res.rows():
            writer.writerow(row)


def run_experiment(setting: SimSetting, groups: dict | None = None, sims: int = 100, alpha: float = 0.05,
                   K: int = DEFAULT_SPLITS, epsilon: float = DEFAULT_EPSILON, s: int | None = None, rng=0, *,
                   calibration: CalibrationCache | None = None, threads: int = 1, backend=None,
                   progress=None) -> ExperimentResult:
    """Rejection frequency of each group over ``sims`` independent datasets.

    Replicate ``i`` draws its data and runs the pipeline from streams derived
    from ``(seed, i)``.
    """
    if sims < 1:
        raise InvalidArgument("sims must be at least 1")
    seed = _as_seed(rng)
    groups = groups if groups is not None else setting.default_groups()
    names = list(groups)
    calibration = calibration or CalibrationCache()
    bounds = np.zeros((sims, len(names)))
    rejected = np.zeros((sims, len(names)), dtype=bool)
    for i in range(sims):
        data, _ = simulate_dataset(setting, np.random.SeedSequence(seed, spawn_key=(i, 0)))
        agg = aggregate_bounds(
            data, [groups[g] for g in names], K, epsilon, alpha, s,
            np.random.SeedSequence(seed, spawn_key=(i, 1)).generate_state(1)[0],
            calibration=calibration, threads=threads, backend=backend,
        )
        bounds[i] = [b.lower_bound for b in agg]
        rejected[i] = [b.rejected for b in agg]
        if progress is not None:
            progress(i + 1, sims)
    results = [
        GroupResult(g, sims, int(rejected[:, j].sum()), float(bounds[:, j].mean()))
        for j, g in enumerate(names)
    ]
    return ExperimentResult(setting, dict(groups), results, seed, bounds)


def setting_record(setting: SimSetting) -> dict:
    return asdict(setting)
