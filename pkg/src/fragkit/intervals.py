"""Open subsets of (0, 1) with finitely many components.

An :class:`OpenSet` is stored as two sorted, read-only float arrays of left and
right endpoints.  Components that touch (``right_i == left_{i+1}``) are kept
apart: the shared endpoint is a genuine point of the complement.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Components shorter than this are treated as dust when sets are built by
#: arithmetic (embedding, lifting, simulation).
FLOOR = 1e-12

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    left: float
    right: float

    def __post_init__(self):
        if not (0.0 <= self.left < self.right <= 1.0):
            raise ValueError(f"invalid interval ({self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float).reshape(-1)
    a.flags.writeable = False
    return a


class OpenSet:
    """Finite disjoint union of open subintervals of (0, 1), sorted."""

    __slots__ = ("lefts", "rights")

    def __init__(self, lefts: Sequence[float] = (), rights: Sequence[float] = ()):
        lefts = _readonly(lefts)
        rights = _readonly(rights)
        if lefts.shape != rights.shape:
            raise ValueError("lefts and rights differ in length")
        if lefts.size:
            if lefts[0] < 0.0 or rights[-1] > 1.0:
                raise ValueError("components must lie in [0, 1]")
            if np.any(rights <= lefts):
                raise ValueError("empty or reversed component")
            if np.any(lefts[1:] < rights[:-1]):
                raise ValueError("components overlap or are unsorted")
        object.__setattr__(self, "lefts", lefts)
        object.__setattr__(self, "rights", rights)

    def __setattr__(self, name, value):
        raise AttributeError("OpenSet is immutable")

    # construction helpers

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], floor: float = 0.0) -> "OpenSet":
        """Build from ``[(a, b), ...]``; components of length <= ``floor`` are dropped."""
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        if floor > 0.0 and arr.size:
            arr = arr[arr[:, 1] - arr[:, 0] > floor]
        order = np.argsort(arr[:, 0], kind="stable")
        arr = arr[order]
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def unit(cls) -> "OpenSet":
        return cls([0.0], [1.0])

    @classmethod
    def empty(cls) -> "OpenSet":
        return cls()

    # container protocol

    def __len__(self) -> int:
        return int(self.lefts.size)

    def __iter__(self):
        for a, b in zip(self.lefts.tolist(), self.rights.tolist()):
            yield Interval(a, b)

    def __getitem__(self, i: int) -> Interval:
        return Interval(float(self.lefts[i]), float(self.rights[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpenSet):
            return NotImplemented
        return np.array_equal(self.lefts, other.lefts) and np.array_equal(self.rights, other.rights)

    def __hash__(self) -> int:
        return hash((self.lefts.tobytes(), self.rights.tobytes()))

    def __repr__(self) -> str:
        if len(self) > 6:
            inner = " ∪ ".join(f"({a:.4g}, {b:.4g})" for a, b in self.pairs()[:3])
            return f"OpenSet({inner} ∪ ... [{len(self)} components])"
        inner = " ∪ ".join(f"({a:.6g}, {b:.6g})" for a, b in self.pairs())
        return f"OpenSet({inner or '∅'})"

    @property
    def components(self) -> tuple[Interval, ...]:
        return tuple(self)

    @property
    def lengths(self) -> np.ndarray:
        return self.rights - self.lefts

    @property
    def measure(self) -> float:
        return math.fsum(self.lengths.tolist())

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.lefts.tolist(), self.rights.tolist()))

    def component_at(self, x: float) -> int:
        """Index of the component containing ``x``, or -1 if ``x`` is in the complement."""
        i = int(np.searchsorted(self.lefts, x, side="right")) - 1
        if i >= 0 and x < self.rights[i] and x > self.lefts[i]:
            return i
        return -1

    def to_json(self) -> str:
        return json.dumps([[a, b] for a, b in self.pairs()])

    @classmethod
    def from_json(cls, text: str) -> "OpenSet":
        return cls.from_pairs(json.loads(text))


class MassPartition:
    """Nonincreasing masses plus the dust mass ``1 - sum(masses)`` (or more)."""

    __slots__ = ("masses", "dust")

    def __init__(self, masses: Sequence[float] = (), dust: float = 0.0):
        m = _readonly(masses)
        if m.size:
            if np.any(m <= 0.0) or np.any(m > 1.0 + _MASS_TOL):
                raise ValueError("masses must lie in (0, 1]")
            if np.any(np.diff(m) > 0.0):
                raise ValueError("masses must be nonincreasing")
        dust = float(dust)
        if dust < 0.0:
            raise ValueError("dust must be nonnegative")
        if math.fsum(m.tolist()) + dust > 1.0 + _MASS_TOL:
            raise ValueError("total mass exceeds 1")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "dust", dust)

    def __setattr__(self, name, value):
        raise AttributeError("MassPartition is immutable")

    @classmethod
    def from_unsorted(cls, masses: Sequence[float], floor: float = 0.0) -> "MassPartition":
        """Rank ``masses``; entries <= ``floor`` and the missing mass go to dust."""
        m = np.asarray(masses, dtype=float).reshape(-1)
        kept = np.sort(m[m > floor])[::-1]
        dust = max(0.0, 1.0 - math.fsum(kept.tolist()))
        return cls(kept, dust)

    def __len__(self) -> int:
        return int(self.masses.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MassPartition):
            return NotImplemented
        return np.array_equal(self.masses, other.masses) and self.dust == other.dust

    def __repr__(self) -> str:
        head = ", ".join(f"{x:.4g}" for x in self.masses[:6].tolist())
        more = ", ..." if len(self) > 6 else ""
        return f"MassPartition(({head}{more}), dust={self.dust:.4g})"

    @property
    def total(self) -> float:
        return math.fsum(self.masses.tolist())

    def to_dict(self) -> dict:
        return {"masses": self.masses.tolist(), "dust": self.dust}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MassPartition":
        d = json.loads(text)
        return cls(d["masses"], d["dust"])


def ranked_lengths(U: OpenSet) -> MassPartition:
    lengths = np.sort(U.lengths)[::-1]
    dust = max(0.0, 1.0 - math.fsum(lengths.tolist()))
    return MassPartition(lengths, dust)


def chi(U: OpenSet, x) -> np.ndarray:
    """Distance from ``x`` to the complement of ``U`` (vectorised over ``x``)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if len(U) == 0:
        return out
    i = np.searchsorted(U.lefts, x, side="right") - 1
    ok = i >= 0
    j = np.where(ok, i, 0)
    inside = ok & (x < U.rights[j])
    out[inside] = np.minimum(x - U.lefts[j], U.rights[j] - x)[inside]
    return out


def _breakpoints(U: OpenSet) -> np.ndarray:
    return np.concatenate([U.lefts, U.rights, 0.5 * (U.lefts + U.rights)])


def distance(U: OpenSet, V: OpenSet) -> float:
    """Sup-norm distance between the complement-distance functions of U and V.

    Both functions are piecewise linear with kinks only at component endpoints
    and midpoints, so the supremum is attained on the merged breakpoint set.
    """
    xs = np.unique(np.concatenate([[0.0, 1.0], _breakpoints(U), _breakpoints(V)]))
    return float(np.max(np.abs(chi(U, xs) - chi(V, xs))))


def embed(I: Interval, V: OpenSet, floor: float = 0.0) -> OpenSet:
    """Image of ``V`` under the affine map ``x -> I.left + x * |I|``."""
    a, b = I.left, I.right
    w = b - a
    lefts = np.clip(a + V.lefts * w, a, b)
    rights = np.clip(a + V.rights * w, a, b)
    rights = np.where(V.rights == 1.0, b, rights)
    keep = rights - lefts > floor
    return OpenSet(lefts[keep], rights[keep])


def is_nested(U: OpenSet, V: OpenSet) -> bool:
    """True iff U is a subset of V."""
    if len(U) == 0:
        return True
    if len(V) == 0:
        return False
    i = np.searchsorted(V.lefts, U.lefts, side="right") - 1
    if np.any(i < 0):
        return False
    return bool(np.all(U.rights <= V.rights[i]))


def union(parts: Iterable[OpenSet]) -> OpenSet:
    """Union of open sets with pairwise disjoint components."""
    parts = list(parts)
    if not parts:
        return OpenSet.empty()
    lefts = np.concatenate([p.lefts for p in parts])
    rights = np.concatenate([p.rights for p in parts])
    order = np.argsort(lefts, kind="stable")
    return OpenSet(lefts[order], rights[order])
