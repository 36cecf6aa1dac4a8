"""Orthonormal row projections whose row space contains a given signal direction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

DEGENERATE_SIGNAL = 1e-12
DEPENDENT_DRAW = 1e-10


@dataclass(frozen=True)
class Projection:
    A: np.ndarray
    s: int
    seed: int | None = None


def _orthogonalize(v, basis):
    # Two Gram-Schmidt passes keep the rows orthonormal to machine precision.
    for _ in range(2):
        for q in basis:
            v = v - (q @ v) * q
    return v


def build_projection(signal, s: int, rng, seed: int | None = None) -> Projection:
    """Build an ``s x n`` matrix with orthonormal rows, the first along ``signal``.

    The other ``s - 1`` rows come from Gram-Schmidt on i.i.d. standard Gaussian
    vectors; a draw whose residual norm falls below ``1e-10`` is redrawn. A
    signal with norm below ``1e-12`` is ignored and all ``s`` rows are random.
    """
    signal = np.asarray(signal, dtype=float).ravel()
    n = signal.size
    if not 1 <= s <= n:
        raise InvalidArgument(f"projection dimension s={s} must lie in [1, n={n}]")
    rng = np.random.default_rng(rng)
    rows = []
    norm = np.linalg.norm(signal)
    if norm >= DEGENERATE_SIGNAL:
        rows.append(signal / norm)
    while len(rows) < s:
        v = rng.standard_normal(n)
        scale = np.linalg.norm(v)
        v = _orthogonalize(v, rows)
        resid = np.linalg.norm(v)
        if resid < DEPENDENT_DRAW * scale:
            continue
        rows.append(v / resid)
    return Projection(np.vstack(rows), int(s), seed)


def default_dimension(p: int, n_half: int, preferred: int = 10) -> int:
    return max(1, min(preferred, p, n_half))
