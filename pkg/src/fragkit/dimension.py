"""Covering statistics and log-log dimension estimators for complements of open sets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import stats

from .intervals import MassPartition, OpenSet, ranked_lengths
from .measures import DislocationMeasure

ATOL = 1e-12


@dataclass
class CoveringStats:
    eps_grid: np.ndarray
    N: np.ndarray
    M: np.ndarray
    Z: np.ndarray

    def to_rows(self):
        return [{"eps": float(e), "N": float(n), "M": float(m), "Z": float(z)}
                for e, n, m, z in zip(self.eps_grid, self.N, self.M, self.Z)]


@dataclass
class DimensionEstimate:
    beta_N: float
    beta_Z: float
    se_N: float
    se_Z: float
    fit_range: tuple[float, float]

    def to_dict(self):
        return {"beta_N": self.beta_N, "beta_Z": self.beta_Z, "stderr_N": self.se_N,
                "stderr_Z": self.se_Z, "fit_range": list(self.fit_range)}


def covering_counts(s: MassPartition, eps_grid) -> tuple[np.ndarray, np.ndarray]:
    """``N(eps) = #{s_i >= eps}`` and ``M(eps) = Σ s_i 1{s_i <= eps}`` on a grid."""
    eps = np.asarray(eps_grid, dtype=float)
    m = np.sort(s.masses)
    csum = np.concatenate([[0.0], np.cumsum(m)])
    N = m.size - np.searchsorted(m, eps, side="left")
    M = csum[np.searchsorted(m, eps, side="right")]
    return N.astype(float), M


def complement_segments(U: OpenSet) -> tuple[np.ndarray, np.ndarray]:
    """Closed segments ``[a_j, b_j]`` whose union is ``[0, 1] \\ U`` (points allowed)."""
    a = np.concatenate([[0.0], U.rights])
    b = np.concatenate([U.lefts, [1.0]])
    return a, b


@numba.njit(cache=True)
def _greedy(a, b, width, atol):
    count = 0
    end = -np.inf
    for j in range(a.size):
        if b[j] <= end + atol:
            continue
        x = a[j] if a[j] > end else end
        k = max(1, math.ceil((b[j] - x) / width - atol))
        count += k
        end = x + k * width
    return count


def covering_number(U: OpenSet, eps: float) -> int:
    """Fewest closed intervals of length ``2*eps`` covering ``[0, 1] \\ U`` (greedy, optimal on the line)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    a, b = complement_segments(U)
    return int(_greedy(a, b, 2.0 * eps, ATOL))


def brute_force_cover(points: np.ndarray, eps: float) -> int:
    """Minimal cover of a finite point set by brute force over interval anchors (<= 20 points)."""
    pts = np.sort(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 0
    if pts.size > 20:
        raise ValueError("brute force limited to 20 points")
    w = 2.0 * eps
    # an optimal cover can use intervals starting at data points
    for k in range(1, pts.size + 1):
        for starts in itertools.combinations(pts.tolist(), k):
            s = np.array(starts)
            covered = np.any((pts[:, None] >= s[None, :] - ATOL) & (pts[:, None] <= s[None, :] + w + ATOL), axis=1)
            if covered.all():
                return k
    return pts.size


def covering_stats(U: OpenSet, eps_grid) -> CoveringStats:
    """N, M and Z on a grid. M includes the dust, treated as fragments of zero size."""
    eps = np.asarray(eps_grid, dtype=float)
    s = ranked_lengths(U)
    N, M = covering_counts(s, eps)
    M = M + s.dust
    a, b = complement_segments(U)
    Z = np.array([_greedy(a, b, 2.0 * e, ATOL) for e in eps], dtype=float)
    return CoveringStats(eps, N, M, Z)


def covering_bound_holds(cs: CoveringStats) -> np.ndarray:
    """``Z <= M/(2 eps) + N + 1`` pointwise."""
    return cs.Z <= cs.M / (2.0 * cs.eps_grid) + cs.N + 1.0 + 1e-9


def average_stats(items: list[CoveringStats]) -> CoveringStats:
    eps = items[0].eps_grid
    return CoveringStats(eps, np.mean([c.N for c in items], axis=0), np.mean([c.M for c in items], axis=0),
                         np.mean([c.Z for c in items], axis=0))


def _slope(x, y):
    if x.size < 4:
        raise ValueError("need at least 4 grid points in the fit range")
    if np.any(y <= 0):
        raise ValueError("counts must be positive on the fit range")
    r = stats.linregress(x, np.log(y))
    return float(r.slope), float(r.stderr)


def default_fit_range(eps_grid) -> tuple[float, float]:
    """Drop the top and bottom decade of the available span (full span if that leaves < 4 points)."""
    e = np.asarray(eps_grid, dtype=float)
    lo, hi = e.min() * 10.0, e.max() / 10.0
    if np.sum((e >= lo) & (e <= hi)) < 4:
        return float(e.min()), float(e.max())
    return float(lo), float(hi)


def estimate_dimension(cs: CoveringStats, fit_range: tuple[float, float] | None = None) -> DimensionEstimate:
    """Slopes of ``log N`` and ``log Z`` against ``log(1/eps)`` over the fit range."""
    lo, hi = default_fit_range(cs.eps_grid) if fit_range is None else fit_range
    sel = (cs.eps_grid >= lo * (1 - 1e-12)) & (cs.eps_grid <= hi * (1 + 1e-12))
    x = np.log(1.0 / cs.eps_grid[sel])
    bN, sN = _slope(x, cs.N[sel])
    bZ, sZ = _slope(x, cs.Z[sel])
    return DimensionEstimate(bN, bZ, sN, sZ, (lo, hi))


def h_index(nu: DislocationMeasure, eps_grid) -> np.ndarray:
    """``h(eps) = ∫ (#{i : |U_i| >= eps} - 1)^+ ν(dU)`` on a grid."""
    return np.array([nu.h(float(e)) for e in np.atleast_1d(eps_grid)])


def h_slope(nu: DislocationMeasure, eps_grid) -> tuple[float, float]:
    eps = np.asarray(eps_grid, dtype=float)
    return _slope(np.log(1.0 / eps), h_index(nu, eps))


# sets of known dimension


def cantor_set(depth: int) -> OpenSet:
    """Complement of the depth-``depth`` middle-thirds construction (removed open thirds)."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    lefts, rights = [], []
    # integer endpoints over 3**depth
    scale = 3 ** depth
    segs = [(0, scale)]
    for _ in range(depth):
        nxt = []
        for a, b in segs:
            w = (b - a) // 3
            lefts.append(a + w)
            rights.append(b - w)
            nxt.extend([(a, a + w), (b - w, b)])
        segs = nxt
    order = np.argsort(lefts)
    return OpenSet(np.array(lefts, float)[order] / scale, np.array(rights, float)[order] / scale)


def cantor_points(depth: int) -> np.ndarray:
    """Endpoints of the closed intervals of the depth-``depth`` construction."""
    a, b = complement_segments(cantor_set(depth))
    return np.unique(np.concatenate([a, b]))


def stable_range(rng: np.random.Generator, eta: float = 1e-7) -> OpenSet:
    """Gaps of the range of a stable(1/2) subordinator crossing [0, 1].

    Jumps above ``eta`` come from the Lévy intensity ``(2π x^3)^(-1/2) dx``
    (tail ``sqrt(2/(π x))``, sampled as ``eta / V^2``); smaller jumps are
    replaced by their mean drift ``sqrt(2 eta / π)``.
    """
    tail = math.sqrt(2.0 / (math.pi * eta))
    drift = math.sqrt(2.0 * eta / math.pi)
    lefts, rights = [], []
    pos = 0.0
    chunk = 4096
    while pos < 1.0:
        gaps = rng.exponential(1.0 / tail, chunk)
        sizes = eta / rng.random(chunk) ** 2
        starts = pos + np.cumsum(gaps * drift + np.concatenate([[0.0], sizes[:-1]]))
        ends = starts + sizes
        keep = starts < 1.0
        lefts.append(starts[keep])
        rights.append(np.minimum(ends[keep], 1.0))
        pos = float(ends[-1])
    lefts = np.concatenate(lefts)
    rights = np.concatenate(rights)
    ok = rights > lefts
    return OpenSet(lefts[ok], rights[ok])
