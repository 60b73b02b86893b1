"""Ruelle's interval fragmentation through Poisson-Dirichlet lifts.

The state at time ``t`` is a uniform-order lift of PD(t, 0); going from ``t``
to ``s > t`` each component is shattered by an independent lift of
PD(s, -t).  Stick-breaking is truncated at ``k`` sticks and the leftover mass
is folded back proportionally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import stats

from .intervals import OpenSet, embed, union
from .measures import gem_sticks, pd_masses, renormalize
from .paintbox import uniform_order_lift

DEFAULT_STICKS = 1000
DEFAULT_RESOLUTION = 1e-4


def _check_times(t, s):
    if not 0.0 < t < s < 1.0:
        raise ValueError(f"need 0 < t < s < 1, got t={t}, s={s}")


def initial_state(t: float, k: int, rng: np.random.Generator) -> OpenSet:
    """Uniform-order lift of PD(t, 0) truncated at ``k`` sticks."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    return uniform_order_lift(renormalize(pd_masses(t, 0.0, k, rng)), rng)


def frag_step(U: OpenSet, t: float, s: float, k: int, rng: np.random.Generator) -> OpenSet:
    """Shatter every component of ``U`` by an independent lift of PD(s, -t)."""
    _check_times(t, s)
    parts = [embed(I, uniform_order_lift(renormalize(pd_masses(s, -t, k, rng)), rng)) for I in U]
    return union(parts)


# array-level versions used for large ensembles


def _normalized_sticks(alpha, theta, k, rng, size):
    w = gem_sticks(alpha, theta, k, rng, size=size)
    return w / w.sum(axis=-1, keepdims=True)


def initial_masses(t: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Unranked PD(t, 0) masses (renormalised sticks)."""
    return _normalized_sticks(t, 0.0, k, rng, None)


def frag_step_masses(masses: np.ndarray, t: float, s: float, k: int, rng: np.random.Generator,
                     resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    """Masses after a PD(s, -t) shattering step, without tracking positions.

    Only parents of mass at least ``resolution`` are shattered; smaller ones
    are carried over unchanged.  This perturbs ``Σ s_i^2`` by at most
    ``resolution`` and leaves the largest mass exact whenever it exceeds
    ``resolution``.
    """
    _check_times(t, s)
    big = masses >= resolution
    parents = masses[big]
    if parents.size == 0:
        return masses.copy()
    w = _normalized_sticks(s, -t, k, rng, parents.size)
    children = (parents[:, None] * w).ravel()
    return np.concatenate([children[children > 0.0], masses[~big]])


def summary(masses: np.ndarray) -> tuple[float, float]:
    """Largest mass and sum of squares."""
    return float(masses.max()), float(np.dot(masses, masses))


# Chinese restaurant oracle


@numba.njit(cache=True)
def _crp_pairs(alpha, theta, n, u):
    # seat n customers; returns Σ n_j (n_j - 1) / (n (n - 1))
    counts = np.zeros(n, dtype=np.int64)
    tables = 0
    for i in range(n):
        if i == 0:
            counts[0] = 1
            tables = 1
            continue
        x = u[i] * (i + theta)
        new = theta + tables * alpha
        if x < new:
            counts[tables] = 1
            tables += 1
            continue
        x -= new
        j = 0
        acc = counts[0] - alpha
        while acc <= x and j < tables - 1:
            j += 1
            acc += counts[j] - alpha
        counts[j] += 1
    pairs = 0.0
    for j in range(tables):
        pairs += counts[j] * (counts[j] - 1.0)
    return pairs / (n * (n - 1.0))


def crp_pair_fraction(alpha: float, theta: float, n: int, rng: np.random.Generator) -> float:
    """Fraction of ordered customer pairs sharing a table after ``n`` arrivals.

    Unbiased for ``E[Σ s_i^2]`` under PD(alpha, theta).
    """
    if n < 2:
        raise ValueError("need at least two customers")
    return _crp_pairs(float(alpha), float(theta), int(n), rng.random(n))


def crp_oracle(alpha: float, theta: float, n: int, reps: int, rng: np.random.Generator) -> tuple[float, float]:
    """Mean and standard error of the CRP pair fraction over ``reps`` restaurants."""
    vals = np.array([crp_pair_fraction(alpha, theta, n, rng) for _ in range(reps)])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps))


# semigroup check


@dataclass
class SemigroupReport:
    t0: float
    t1: float
    t2: float
    reps: int
    ks_largest: tuple[float, float]
    ks_sumsq: tuple[float, float]
    control_ks_largest: tuple[float, float] | None
    control_ks_sumsq: tuple[float, float] | None
    mean_sumsq_one: float
    mean_sumsq_two: float

    @property
    def passed(self) -> bool:
        return self.ks_largest[1] > 0.01 and self.ks_sumsq[1] > 0.01

    @property
    def control_rejected(self) -> bool | None:
        if self.control_ks_largest is None:
            return None
        return min(self.control_ks_largest[1], self.control_ks_sumsq[1]) < 0.01

    def to_dict(self):
        return {k: getattr(self, k) for k in ("t0", "t1", "t2", "reps", "ks_largest", "ks_sumsq",
                                               "control_ks_largest", "control_ks_sumsq",
                                               "mean_sumsq_one", "mean_sumsq_two")} | {
            "passed": self.passed, "control_rejected": self.control_rejected}


def semigroup_samples(t0, t1, t2, k, rng, resolution=DEFAULT_RESOLUTION, control=False):
    """One replicate: (one-step, two-step[, control]) summaries, each from its own initial state."""
    one = frag_step_masses(initial_masses(t0, k, rng), t0, t2, k, rng, resolution)
    mid = frag_step_masses(initial_masses(t0, k, rng), t0, t1, k, rng, resolution)
    two = frag_step_masses(mid, t1, t2, k, rng, resolution)
    out = [summary(one), summary(two)]
    if control:
        out.append(summary(frag_step_masses(initial_masses(t0, k, rng), t1, t2, k, rng, resolution)))
    return out


def semigroup_consistency(t0: float, t1: float, t2: float, k: int, n_reps: int, rng: np.random.Generator,
                          resolution: float = DEFAULT_RESOLUTION, control: bool = True) -> SemigroupReport:
    """Two-sample KS between one-step and two-step transitions from PD(t0, 0).

    The control replaces the one-step kernel PD(t2, -t0) by PD(t2, -t1) and
    should be rejected.
    """
    if not 0.0 < t0 < t1 < t2 < 1.0:
        raise ValueError("need 0 < t0 < t1 < t2 < 1")
    rows = [semigroup_samples(t0, t1, t2, k, rng, resolution, control) for _ in range(n_reps)]
    return semigroup_report(t0, t1, t2, rows)


def semigroup_report(t0, t1, t2, rows) -> SemigroupReport:
    arr = np.array(rows)  # reps x variants x (largest, sumsq)
    ks = lambda a, b: tuple(float(v) for v in stats.ks_2samp(a, b)[:2])
    ctrl_l = ctrl_s = None
    if arr.shape[1] > 2:
        ctrl_l = ks(arr[:, 2, 0], arr[:, 1, 0])
        ctrl_s = ks(arr[:, 2, 1], arr[:, 1, 1])
    return SemigroupReport(t0, t1, t2, arr.shape[0], ks(arr[:, 0, 0], arr[:, 1, 0]), ks(arr[:, 0, 1], arr[:, 1, 1]),
                           ctrl_l, ctrl_s, float(arr[:, 0, 1].mean()), float(arr[:, 1, 1].mean()))
