"""Paintbox construction between open sets and random compositions."""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .compositions import Composition
from .intervals import FLOOR, MassPartition, OpenSet

MAX_EXACT_N = 5
LIFT_TOL = 1e-9


@dataclass(frozen=True)
class PaintboxSample:
    composition: Composition
    uniforms: np.ndarray


def compose_from_uniforms(U: OpenSet, x: np.ndarray) -> Composition:
    """Composition of ``[len(x)]`` induced by the points ``x`` and the open set ``U``.

    Points in one component form a block; points in the complement are
    singletons.  Blocks are ordered by position in (0, 1).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    labels = -np.arange(1, n + 1)
    keys = x.copy()
    if len(U):
        c = np.searchsorted(U.lefts, x, side="right") - 1
        j = np.where(c >= 0, c, 0)
        inside = (c >= 0) & (x > U.lefts[j]) & (x < U.rights[j])
        labels = np.where(inside, c, labels)
        keys = np.where(inside, U.lefts[j], x)
    order = np.lexsort((labels, keys))
    lab = labels[order]
    cuts = np.flatnonzero(lab[1:] != lab[:-1]) + 1
    blocks = tuple(tuple(sorted((g + 1).tolist())) for g in np.split(order, cuts))
    return Composition(n, blocks)


def sample_composition(U: OpenSet, n: int, rng: np.random.Generator) -> PaintboxSample:
    x = rng.random(n)
    return PaintboxSample(compose_from_uniforms(U, x), x)


def sample_compositions(U: OpenSet, n: int, size: int, rng: np.random.Generator) -> list[Composition]:
    """``size`` independent paintbox draws of a composition of [n]."""
    x = rng.random((size, n))
    return [compose_from_uniforms(U, row) for row in x]


def _slots(U: OpenSet) -> list[tuple[str, float]]:
    # left-to-right alternation of gaps ("d") and components ("c"); zero-length gaps skipped
    slots = []
    prev = 0.0
    for a, b in U.pairs():
        if a > prev:
            slots.append(("d", a - prev))
        slots.append(("c", b - a))
        prev = b
    if prev < 1.0:
        slots.append(("d", 1.0 - prev))
    return slots


def exact_composition_law(U: OpenSet, n: int) -> dict[Composition, float]:
    """Exact law of the paintbox composition of [n] for a finite open set.

    Each index lands in a component or a gap of the complement with
    probability equal to its length; indices sharing a gap are in uniformly
    random relative order.
    """
    if not 1 <= n <= MAX_EXACT_N:
        raise ValueError(f"exact law limited to 1 <= n <= {MAX_EXACT_N}")
    slots = _slots(U)
    law: dict[Composition, float] = defaultdict(float)
    for assign in itertools.product(range(len(slots)), repeat=n):
        p = math.prod(slots[s][1] for s in assign)
        if p == 0.0:
            continue
        members: dict[int, list[int]] = defaultdict(list)
        for i, s in enumerate(assign, start=1):
            members[s].append(i)
        gap_orders = []
        for s in sorted(members):
            if slots[s][0] == "d":
                gap_orders.append(list(itertools.permutations(members[s])))
            else:
                gap_orders.append([tuple(members[s])])
        weight = p / math.prod(len(g) for g in gap_orders)
        keys = sorted(members)
        for choice in itertools.product(*gap_orders):
            blocks: list[tuple[int, ...]] = []
            for s, arrangement in zip(keys, choice):
                if slots[s][0] == "c":
                    blocks.append(tuple(arrangement))
                else:
                    blocks.extend((i,) for i in arrangement)
            law[Composition(n, tuple(blocks))] += weight
    return dict(law)


def empirical_open_set(gamma: Composition) -> OpenSet:
    """Open set whose components have the block proportions of ``gamma``, in block order."""
    edges = np.concatenate([[0], np.cumsum(gamma.block_sizes)]) / gamma.n
    edges[-1] = 1.0
    return OpenSet(edges[:-1], edges[1:])


def uniform_order_lift(s: MassPartition, rng: np.random.Generator, tol: float = LIFT_TOL) -> OpenSet:
    """Lay out the masses of ``s`` left to right in uniformly random order.

    Requires a proper partition (dust <= ``tol``).  Masses below the tracking
    floor are left out of the open set.
    """
    if s.dust > tol:
        raise ValueError(f"uniform-order lift needs zero dust, got {s.dust:.3g}")
    masses = s.masses
    if masses.size == 0:
        raise ValueError("cannot lift an empty partition")
    total = masses.sum()
    scores = rng.random(masses.size)
    lengths = masses[np.argsort(scores, kind="stable")]
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    if total > 1.0:
        edges /= total
    # rounding in the cumulative sum can push trailing edges a few ulps past 1
    np.minimum(edges, 1.0, out=edges)
    lefts, rights = edges[:-1], edges[1:]
    keep = rights - lefts > FLOOR
    return OpenSet(lefts[keep], rights[keep])
