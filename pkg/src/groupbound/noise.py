"""Random convex noise regions and Monte Carlo calibration of their vertex count.

A region is the convex hull of ``2m`` sign-paired unit vectors scaled by
``mu``. The number of pairs ``m`` needed so that the hull, scaled by
``C * mu_star(eps)``, covers Gaussian noise ``eps`` with probability
``1 - alpha`` depends only on the dimension and is found by simulation.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import CalibrationDiverged, CalibrationMissing, DimensionMismatch, InvalidArgument
from .lp import LinearProgram, LpStatus, solve_lp

SCALE_CONSTANT = 3.0
MEMBERSHIP_TOL = 1e-9

# Vertex pairs per dimension, m/n, keyed by alpha then n.
REFERENCE_TABLE = {
    0.05: {5: 2.8, 10: 3.4, 15: 4.7, 20: 6.5, 25: 8.8, 30: 12.0, 40: 23.5, 50: 41.8},
    0.025: {5: 3.4, 10: 3.9, 15: 5.2, 20: 7.1, 25: 9.7, 30: 13.2, 40: 25.8, 50: 46.0},
    0.01: {5: 5.6, 10: 4.8, 15: 6.0, 20: 8.6, 25: 10.7, 30: 14.5, 40: 28.4, 50: 50.6},
    0.005: {5: 14.6, 10: 5.5, 15: 7.0, 20: 9.5, 25: 11.8, 30: 16.0, 40: 31.2, 50: 55.7},
}


@dataclass(frozen=True)
class NoiseRegion:
    """Sign-paired unit vertices ``E`` (dim x 2m) and scale ``mu``."""

    E: np.ndarray
    mu: float
    m: int
    seed: int | None = None

    @property
    def dim(self) -> int:
        return self.E.shape[0]

    def rescaled(self, mu: float) -> "NoiseRegion":
        return NoiseRegion(self.E, float(mu), self.m, self.seed)


def _paired(unit_rows: np.ndarray) -> np.ndarray:
    m, dim = unit_rows.shape
    E = np.empty((dim, 2 * m))
    E[:, 0::2] = unit_rows.T
    E[:, 1::2] = -unit_rows.T
    return E


def _unit_rows(rng, m, dim):
    v = rng.standard_normal((m, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_region(dim: int, m: int, mu: float, rng, seed: int | None = None) -> NoiseRegion:
    """Draw ``m`` isotropic unit vectors in ``R^dim`` and pair each with its negation.

    Columns ``2k`` and ``2k + 1`` (0-based) are ``e_k`` and ``-e_k``.
    """
    if dim <= 0 or m <= 0:
        raise InvalidArgument(f"dim and m must be positive, got dim={dim}, m={m}")
    if mu < 0:
        raise InvalidArgument(f"mu must be non-negative, got {mu}")
    rng = np.random.default_rng(rng)
    return NoiseRegion(_paired(_unit_rows(rng, m, dim)), float(mu), int(m), seed)


def hull_gauge(E: np.ndarray, v: np.ndarray) -> float:
    """Smallest ``sum(g)`` with ``E g = v, g >= 0``; ``inf`` when ``v`` is outside the cone."""
    sol = solve_lp(LinearProgram(np.ones(E.shape[1]), E, v))
    if sol.status is not LpStatus.OPTIMAL:
        return math.inf
    return sol.value


def contains(region: NoiseRegion, eta) -> bool:
    """Whether ``eta`` lies in the hull of ``mu * E`` (origin included)."""
    eta = np.asarray(eta, dtype=float).ravel()
    if eta.size != region.dim:
        raise DimensionMismatch(f"eta has length {eta.size}, region has dimension {region.dim}")
    if region.mu == 0.0:
        return not np.any(eta)
    return hull_gauge(region.E, eta / region.mu) <= 1.0 + MEMBERSHIP_TOL


def mu_star(eps) -> float:
    """Distance from the origin to the ray ``{-kappa * e_1 : kappa >= 0}`` shifted by ``eps``.

    Equals ``||eps||`` when ``eps[0] >= 0`` and ``||eps[1:]||`` otherwise.
    """
    eps = np.asarray(eps, dtype=float).ravel()
    if eps[0] >= 0:
        return float(math.sqrt(eps @ eps))
    return float(math.sqrt(eps[1:] @ eps[1:]))


@dataclass(frozen=True)
class CalibrationEntry:
    dim: int
    alpha: float
    m: int
    reps: int
    seed: int | None
    achieved_coverage: float

    def to_json(self) -> dict:
        return asdict(self)


class CoverageSimulator:
    """Monte Carlo estimate of ``P(eps in hull(C * mu_star(eps) * E))`` as a function of m.

    Replicate ``i`` draws from its own stream ``SeedSequence(seed, spawn_key=(i,))``:
    first the noise, then vertex directions one at a time. Regions for
    increasing ``m`` are therefore nested, coverage is monotone in ``m`` for a
    fixed seed, and results do not depend on evaluation order.
    """

    def __init__(self, dim: int, reps: int, seed: int, *, sigma: float = 1.0, scale_constant: float = SCALE_CONSTANT):
        if dim <= 0:
            raise InvalidArgument("dim must be positive")
        if reps <= 0:
            raise InvalidArgument("reps must be positive")
        self.dim, self.reps, self.seed = int(dim), int(reps), int(seed)
        self.sigma = float(sigma)
        self.scale_constant = float(scale_constant)
        # Per-replicate brackets: covered for all m >= hi, not covered for all m <= lo.
        self._lo = np.zeros(self.reps, dtype=np.int64)
        self._hi = np.full(self.reps, np.iinfo(np.int64).max)

    def _stream(self, i):
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(i,)))

    def covered(self, i: int, m: int) -> bool:
        if m >= self._hi[i]:
            return True
        if m <= self._lo[i]:
            return False
        rng = self._stream(i)
        eps = self.sigma * rng.standard_normal(self.dim)
        radius = self.scale_constant * mu_star(eps)
        if radius == 0.0:
            hit = not np.any(eps)
        else:
            E = _paired(_unit_rows(rng, m, self.dim))
            hit = hull_gauge(E, eps / radius) <= 1.0 + MEMBERSHIP_TOL
        if hit:
            self._hi[i] = m
        else:
            self._lo[i] = m
        return hit

    def coverage(self, m: int) -> float:
        return sum(self.covered(i, m) for i in range(self.reps)) / self.reps


def calibrate_m(dim: int, alpha: float, reps: int = 5000, rng=0, *, sigma: float = 1.0,
                scale_constant: float = SCALE_CONSTANT, cap: int | None = None) -> CalibrationEntry:
    """Smallest vertex-pair count whose simulated coverage reaches ``1 - alpha``.

    Doubles ``m`` from ``dim`` until covered, then bisects. ``rng`` is an
    integer seed (a Generator is accepted and reduced to a seed).
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha}")
    seed = _as_seed(rng)
    cap = cap if cap is not None else max(1, 10**6 // dim)
    sim = CoverageSimulator(dim, reps, seed, sigma=sigma, scale_constant=scale_constant)
    target = 1.0 - alpha

    lo, hi = 0, max(1, dim)
    cov = sim.coverage(hi)
    while cov < target:
        lo = hi
        if hi >= cap:
            raise CalibrationDiverged(f"coverage {cov:.4f} < {target:.4f} at m={hi} (cap {cap}) for dim={dim}")
        hi = min(2 * hi, cap)
        cov = sim.coverage(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        c = sim.coverage(mid)
        if c >= target:
            hi, cov = mid, c
        else:
            lo = mid
    return CalibrationEntry(dim, float(alpha), int(hi), int(reps), seed, float(cov))


def _as_seed(rng) -> int:
    if rng is None:
        return int(np.random.SeedSequence().entropy % 2**63)
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(np.random.default_rng(rng).integers(2**63))


def reference_table_m(dim: int, alpha: float) -> int | None:
    for a, row in REFERENCE_TABLE.items():
        if math.isclose(a, alpha, rel_tol=1e-9) and dim in row:
            return int(math.ceil(row[dim] * dim - 1e-9))
    return None


def default_cache_path() -> Path:
    env = os.environ.get("GROUPBOUND_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "groupbound" / "calibration.json"


def _key(dim, alpha):
    return int(dim), round(float(alpha), 12)


class CalibrationCache:
    """Vertex counts by ``(dim, alpha)``: stored entries, then the reference table, then simulation.

    Parameters
    ----------
    path : path-like, optional
        JSON file holding an array of calibration entries. Loaded if present;
        written by :meth:`save`.
    use_table : bool
        Fall back to the published vertex-ratio table for covered cells.
    calibrate_missing : bool
        Simulate missing cells on demand (``CalibrationMissing`` otherwise).
    """

    def __init__(self, path=None, *, use_table=True, calibrate_missing=True, reps=5000, seed=0, autosave=False):
        self.path = Path(path) if path is not None else None
        self.use_table = use_table
        self.calibrate_missing = calibrate_missing
        self.reps = reps
        self.seed = seed
        self.autosave = autosave
        self.entries: dict[tuple[int, float], CalibrationEntry] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self.load()

    def load(self):
        with open(self.path) as fh:
            records = json.load(fh)
        for rec in records:
            entry = CalibrationEntry(**rec)
            self.entries[_key(entry.dim, entry.alpha)] = entry

    def save(self, path=None):
        path = Path(path) if path is not None else self.path
        if path is None:
            raise InvalidArgument("no cache path configured")
        path.parent.mkdir(parents=True, exist_ok=True)
        records = [self.entries[k].to_json() for k in sorted(self.entries)]
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w") as fh:
            json.dump(records, fh, indent=1)
        os.replace(tmp, path)

    def add(self, entry: CalibrationEntry):
        with self._lock:
            self.entries[_key(entry.dim, entry.alpha)] = entry

    def get(self, dim, alpha):
        return self.entries.get(_key(dim, alpha))

    def lookup(self, dim: int, alpha: float) -> int:
        with self._lock:
            entry = self.entries.get(_key(dim, alpha))
            if entry is not None:
                return entry.m
            if self.use_table:
                m = reference_table_m(dim, alpha)
                if m is not None:
                    return m
            if not self.calibrate_missing:
                raise CalibrationMissing(f"no calibration for dim={dim}, alpha={alpha}")
            entry = calibrate_m(dim, alpha, self.reps, self.seed)
            self.entries[_key(dim, alpha)] = entry
        if self.autosave and self.path is not None:
            self.save()
        return entry.m
