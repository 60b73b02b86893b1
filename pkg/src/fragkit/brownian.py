"""Interval fragmentation read off a Brownian excursion on a dyadic grid.

The state at time t is the set of constancy intervals of the running maximum
of ``t*s - e(s)``.  Cell ``k`` (covering ``[(k-1)/m, k/m]``) stays constant
exactly while ``t <= tau_k`` where ``tau_k = m * max_{u<k} (e_k - e_u)/(k - u)``,
the slope to ``k`` of the lower convex hull of the earlier points.  All
per-path kernels are compiled with numba.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .intervals import OpenSet
from .measures import integrate_unit

DEFAULT_GRID = 2 ** 20
MAX_RESAMPLE = 100


class GridWarning(UserWarning):
    """A grid-scale artefact (for instance a leftmost fragment not touching 0)."""


@dataclass(frozen=True)
class ExcursionPath:
    m: int
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.shape != (self.m + 1,):
            raise ValueError("need m + 1 grid values")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("excursion must vanish at both ends")
        if self.m > 1 and not np.all(v[1:-1] > 0.0):
            raise ValueError("excursion interior must be strictly positive")


@numba.njit(cache=True)
def _bridge(z):
    # random-walk bridge B_0..B_m from normal increments z (unit variance)
    m = z.size
    scale = 1.0 / math.sqrt(m)
    w = np.empty(m + 1)
    w[0] = 0.0
    acc = 0.0
    for i in range(m):
        acc += float(z[i]) * scale
        w[i + 1] = acc
    end = w[m]
    for i in range(m + 1):
        w[i] -= end * i / m
    w[m] = 0.0
    return w


@numba.njit(cache=True)
def _vervaat(b):
    # rotate the bridge at its first argmin over 0..m-1; returns (excursion, tie flag)
    m = b.size - 1
    k = 0
    lo = b[0]
    for i in range(1, m):
        if b[i] < lo:
            lo = b[i]
            k = i
    tie = False
    for i in range(m):
        if i != k and b[i] == lo:
            tie = True
    e = np.empty(m + 1)
    for j in range(m):
        e[j] = b[(k + j) % m] - lo
    e[m] = 0.0
    return e, tie


def bridge_from_normals(z: np.ndarray) -> np.ndarray:
    return _bridge(np.ascontiguousarray(z))


def vervaat(bridge: np.ndarray) -> tuple[np.ndarray, bool]:
    """Vervaat rotation of a bridge at its (first) minimum."""
    return _vervaat(np.ascontiguousarray(bridge, dtype=np.float64))


def _normals(m: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(m, dtype=np.float32)


def sample_excursion(m: int, rng: np.random.Generator) -> ExcursionPath:
    """Grid excursion by Vervaat rotation of a Gaussian random-walk bridge."""
    if m < 2 or m & (m - 1):
        raise ValueError("grid size must be a power of two >= 2")
    for _ in range(MAX_RESAMPLE):
        e, tie = _vervaat(_bridge(_normals(m, rng)))
        if not tie and np.all(e[1:-1] > 0.0):
            return ExcursionPath(m, e)
    raise RuntimeError("could not draw a bridge with a unique minimum")


def rejection_excursion(m: int, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """Grid excursion by rejection: bridges are redrawn until strictly positive inside.

    Acceptance probability is ``1/m``; meant as an independent oracle at small m.
    """
    batch = 4 * m if batch is None else batch
    while True:
        z = rng.standard_normal((batch, m))
        w = np.concatenate([np.zeros((batch, 1)), np.cumsum(z, axis=1) / math.sqrt(m)], axis=1)
        b = w - w[:, -1:] * (np.arange(m + 1) / m)
        ok = np.all(b[:, 1:-1] > 0.0, axis=1)
        if ok.any():
            out = b[np.argmax(ok)]
            out[0] = out[-1] = 0.0
            return out


# state at time t


def _runs_to_openset(const: np.ndarray, m: int) -> OpenSet:
    # const[k-1] is True when cell k is a constancy cell
    padded = np.concatenate([[False], const, [False]])
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return OpenSet(starts / m, ends / m)


def ap_state(e: ExcursionPath, t: float) -> OpenSet:
    """Constancy intervals of the running maximum of ``t*s - e(s)`` at grid scale."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = e.m
    y = t * (np.arange(m + 1) / m) - e.values
    S = np.maximum.accumulate(y)
    return _runs_to_openset(S[1:] == S[:-1], m)


@numba.njit(cache=True)
def _split_times(e):
    # tau_k = m * slope of the new lower-hull edge ending at k (monotone chain)
    m = e.size - 1
    tau = np.empty(m)
    hull = np.empty(m + 1, dtype=np.int64)
    h = 0
    hull[0] = 0
    for k in range(1, m + 1):
        while h >= 1:
            a = hull[h - 1]
            b = hull[h]
            # pop b if it lies on or above the segment from a to k
            if (e[b] - e[a]) * (k - a) >= (e[k] - e[a]) * (b - a):
                h -= 1
            else:
                break
        j = hull[h]
        tau[k - 1] = m * (e[k] - e[j]) / (k - j)
        h += 1
        hull[h] = k
    return tau


def split_times(e: ExcursionPath) -> np.ndarray:
    """``tau[k-1]``: last time at which cell k is still inside a fragment."""
    return _split_times(e.values)


def state_from_split_times(tau: np.ndarray, t: float) -> OpenSet:
    return _runs_to_openset(tau >= t, tau.size)


def leftmost_fragment_length(U: OpenSet, warn: bool = True) -> float:
    """Length of the first component; warns if it does not start at 0."""
    if len(U) == 0:
        raise ValueError("empty state has no leftmost fragment")
    if U.lefts[0] > 0.0 and warn:
        warnings.warn(f"leftmost fragment starts at {U.lefts[0]:.3g}, not 0", GridWarning)
    return float(U.rights[0] - U.lefts[0])


@numba.njit(cache=True)
def _leftmost(e, t):
    # first cell where the running max of t*s - e strictly increases
    m = e.size - 1
    best = 0.0
    for k in range(1, m + 1):
        y = t * k / m - e[k]
        if y > best:
            return (k - 1) / m
        best = max(best, y)
    return 1.0


@numba.njit(cache=True)
def _leftmost_pair(z, t):
    # leftmost length at grid m and at grid m/2 built from the same bridge
    b = _bridge(z)
    e, tie = _vervaat(b)
    fine = _leftmost(e, t)
    half = b[::2].copy()
    e2, tie2 = _vervaat(half)
    coarse = _leftmost(e2, t)
    return fine, coarse, tie or tie2


def leftmost_lengths(m: int, t: float, size: int, rng: np.random.Generator, coupled: bool = True):
    """Leftmost-fragment lengths of ``size`` excursions at grid ``m``.

    With ``coupled`` also returns the lengths for the same bridges subsampled
    to grid ``m/2`` (even indices of a Gaussian bridge form a bridge on the
    coarser grid with the correct scaling).
    """
    fine = np.empty(size)
    coarse = np.empty(size)
    i = 0
    while i < size:
        f, c, tie = _leftmost_pair(_normals(m, rng), t)
        if tie:
            continue
        fine[i], coarse[i] = f, c
        i += 1
    return (fine, coarse) if coupled else fine


def rho_density(x, t: float):
    """Density of the leftmost fragment at time ``t``."""
    x = np.asarray(x, dtype=float)
    return t * (2.0 * np.pi * x * (1.0 - x) ** 3) ** -0.5 * np.exp(-x * t * t / (2.0 * (1.0 - x)))


def rho_cdf(xs, t: float) -> np.ndarray:
    """CDF of the leftmost-fragment law at the points ``xs`` (incremental quadrature)."""
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs)
    f = lambda y: float(rho_density(y, t))
    out = np.empty(xs.size)
    acc, prev = 0.0, 0.0
    for i in order:
        x = min(max(xs[i], 0.0), 1.0)
        if x > prev:
            acc += integrate_unit(f, prev, x)
            prev = x
        out[i] = acc
    return out


# first macroscopic split along the main lineage


@numba.njit(cache=True)
def _first_split(order, m, min_share):
    # remove cells in ascending tau; follow the larger piece until a cut leaves
    # both sides with at least min_share of the current fragment
    p, q = 0, m
    for idx in range(order.size):
        c = order[idx]
        if c < p or c >= q:
            continue
        left = c - p
        right = q - c - 1
        tot = left + right
        if tot > 0 and min(left, right) >= min_share * tot:
            return left, right
        if left >= right:
            q = c
        else:
            p = c + 1
        if q - p < 2:
            break
    return -1, -1


def first_split(e: ExcursionPath, min_share: float = 0.05) -> tuple[float, float] | None:
    """Left and right masses of the first split of the main fragment with both shares >= ``min_share``."""
    tau = split_times(e)
    order = np.argsort(tau, kind="stable")
    left, right = _first_split(order, e.m, min_share)
    if left < 0:
        return None
    return left / e.m, right / e.m


@dataclass
class LeftBiasBin:
    lo: float
    hi: float
    n: int
    p_left_larger: float
    mean_max: float
    se: float

    @property
    def z(self) -> float:
        return (self.p_left_larger - self.mean_max) / self.se if self.se > 0 else math.nan


def first_split_left_bias(shares: np.ndarray, bins=(0.5, 0.6, 0.7, 0.8, 0.9, 0.95)) -> list[LeftBiasBin]:
    """Bin the left share ``x`` of first splits by ``max(x, 1-x)``.

    Each bin reports the frequency of the left piece being the larger one,
    the mean of ``max(x, 1-x)`` and the standard error of their difference.
    """
    x = np.asarray(shares, dtype=float)
    mx = np.maximum(x, 1.0 - x)
    left_larger = (x > 0.5).astype(float)
    tie = x == 0.5
    left_larger[tie] = 0.5
    out = []
    for lo, hi in zip(bins[:-1], bins[1:]):
        sel = (mx >= lo) & (mx < hi)
        n = int(sel.sum())
        if n < 2:
            out.append(LeftBiasBin(lo, hi, n, math.nan, math.nan, math.nan))
            continue
        d = left_larger[sel] - mx[sel]
        out.append(LeftBiasBin(lo, hi, n, float(left_larger[sel].mean()), float(mx[sel].mean()),
                               float(d.std(ddof=1) / math.sqrt(n))))
    return out


def first_split_shares(m: int, size: int, rng: np.random.Generator, min_share: float = 0.05) -> tuple[np.ndarray, int]:
    """Left shares of first macroscopic splits for ``size`` excursions; also returns the skip count."""
    shares = []
    skipped = 0
    for _ in range(size):
        e = sample_excursion(m, rng)
        r = first_split(e, min_share)
        if r is None:
            skipped += 1
            continue
        a, b = r
        shares.append(a / (a + b))
    return np.array(shares), skipped
