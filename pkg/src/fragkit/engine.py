"""Poissonian construction of interval and composition fragmentations.

Every live fragment carries an exponential clock whose rate is the truncated
mass of the dislocation measure.  When it rings, a sampled open set is
embedded into the fragment's current (eroded) window.  Erosion acts in closed
form inside each fragment, in coordinates relative to the fragment at birth.
"""
from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .compositions import Composition
from .intervals import FLOOR, Interval, OpenSet, embed
from .measures import (DislocationMeasure, DivergentIntegralError, FragmentationCharacteristics,
                       QuadratureError)
from .paintbox import compose_from_uniforms

DEFAULT_MAX_FRAGMENTS = 200_000


class DegeneratePathWarning(UserWarning):
    """The characteristics have no dislocation and no erosion; the path is constant."""


class TooManyFragmentsError(RuntimeError):
    pass


# erosion


class Erosion:
    """Deterministic erosion of a fragment from both ends.

    ``window(birth, t)`` returns the relative eroded fractions ``(l, r)``: at
    time ``t`` a fragment born at ``birth`` occupies ``(l, 1 - r)`` of its
    birth interval.
    """

    zero = False

    def window(self, birth, t):
        raise NotImplementedError

    def kill_time(self, birth: float, v: float, until: float) -> float:
        """First time the eroded fronts reach relative position ``v``, or inf."""
        raise NotImplementedError


class NoErosion(Erosion):
    zero = True

    def window(self, birth, t):
        z = np.zeros_like(np.asarray(t - birth, dtype=float))
        return z, z

    def kill_time(self, birth, v, until):
        return math.inf


@dataclass(frozen=True)
class HomogeneousErosion(Erosion):
    c_l: float
    c_r: float

    def __post_init__(self):
        if self.c_l < 0 or self.c_r < 0:
            raise ValueError("erosion coefficients must be nonnegative")

    @property
    def c(self):
        return self.c_l + self.c_r

    @property
    def zero(self):
        return self.c == 0.0

    def window(self, birth, t):
        s = np.maximum(np.asarray(t, dtype=float) - birth, 0.0)
        c = self.c
        if c == 0.0:
            z = np.zeros_like(s)
            return z, z
        frac = -np.expm1(-c * s)
        return (self.c_l / c) * frac, (self.c_r / c) * frac

    def kill_time(self, birth, v, until=math.inf):
        c = self.c
        if c == 0.0:
            return math.inf
        out = math.inf
        if self.c_l > 0 and v < self.c_l / c:
            out = min(out, -math.log1p(-v * c / self.c_l) / c)
        if self.c_r > 0 and 1.0 - v < self.c_r / c:
            out = min(out, -math.log1p(-(1.0 - v) * c / self.c_r) / c)
        return birth + out


def _quad(fn, a, b, points=None):
    if b <= a:
        return 0.0
    pts = None if points is None else [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, a, b, epsabs=1e-12, epsrel=1e-12, limit=500, points=pts)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if not math.isfinite(val):
        raise DivergentIntegralError("erosion rate is not integrable")
    return val


class InhomogeneousErosion(Erosion):
    """Time-dependent rates ``c_l(u)``, ``c_r(u)``.

    A fragment born at ``b`` has lost ``∫_b^t c_l(u) exp(-(C_u - C_b)) du`` on
    the left at time ``t``, where ``C_u = ∫_0^u (c_l + c_r)``.  ``breakpoints``
    lists discontinuities of the rates, passed on to the quadrature.
    """

    def __init__(self, c_l_fn: Callable[[float], float], c_r_fn: Callable[[float], float],
                 breakpoints: Sequence[float] = ()):
        self.c_l_fn, self.c_r_fn = c_l_fn, c_r_fn
        self.breakpoints = tuple(sorted(breakpoints))

    def _C(self, a, b):
        return _quad(lambda u: self.c_l_fn(u) + self.c_r_fn(u), a, b, self.breakpoints)

    def _front(self, fn, birth, t):
        return _quad(lambda u: fn(u) * math.exp(-self._C(birth, u)), birth, t, self.breakpoints)

    def window(self, birth, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        bs = np.broadcast_to(np.asarray(birth, dtype=float), ts.shape)
        l = np.array([self._front(self.c_l_fn, b, x) for b, x in zip(bs, ts)])
        r = np.array([self._front(self.c_r_fn, b, x) for b, x in zip(bs, ts)])
        if np.ndim(t) == 0 and np.ndim(birth) == 0:
            return float(l[0]), float(r[0])
        return l.reshape(np.shape(ts)), r.reshape(np.shape(ts))

    def kill_time(self, birth, v, until):
        if not math.isfinite(until):
            raise ValueError("inhomogeneous kill time needs a finite search horizon")
        l, r = self.window(birth, until)
        out = math.inf
        if l > v:
            out = optimize.brentq(lambda t: self.window(birth, t)[0] - v, birth, until, xtol=1e-12)
        if 1.0 - r < v:
            out = min(out, optimize.brentq(lambda t: 1.0 - self.window(birth, t)[1] - v, birth, until, xtol=1e-12))
        return out


def erosion_state(c_l: float, c_r: float, t: float) -> OpenSet:
    """State at time ``t`` of pure erosion started from (0, 1)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if c_l + c_r == 0.0:
        return OpenSet.unit()
    l, r = HomogeneousErosion(c_l, c_r).window(0.0, t)
    return OpenSet([float(l)], [1.0 - float(r)])


def erosion_state_inhomogeneous(c_l_fn, c_r_fn, t: float, breakpoints: Sequence[float] = ()) -> OpenSet:
    """State at time ``t`` of pure erosion with time-dependent rates (by quadrature)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    l, r = InhomogeneousErosion(c_l_fn, c_r_fn, breakpoints).window(0.0, t)
    if l + r >= 1.0:
        return OpenSet.empty()
    return OpenSet([l], [1.0 - r])


def erosion_state_piecewise(knots: Sequence[float], c_l: Sequence[float], c_r: Sequence[float],
                            t: float) -> OpenSet:
    """Closed form for rates constant on ``[knots[i], knots[i+1])`` (last piece open-ended).

    Composes the homogeneous formula piece by piece: on each piece the still
    uneroded fraction ``e^{-C}`` is shared out in proportion ``c_l : c_r``.
    """
    knots = list(knots)
    if knots[0] != 0.0 or len(c_l) != len(knots) or len(c_r) != len(knots):
        raise ValueError("knots must start at 0 and match the rate lists")
    bounds = knots[1:] + [math.inf]
    left = right = 0.0
    C = 0.0
    for a, b, cl, cr in zip(knots, bounds, c_l, c_r):
        if t <= a:
            break
        dt = min(t, b) - a
        c = cl + cr
        if c > 0:
            frac = math.exp(-C) * -math.expm1(-c * dt)
            left += cl / c * frac
            right += cr / c * frac
            C += c * dt
    return OpenSet([left], [1.0 - right])


def make_erosion(chars: FragmentationCharacteristics) -> Erosion:
    return HomogeneousErosion(chars.c_l, chars.c_r) if chars.c > 0 else NoErosion()


# paths


@dataclass
class Fragment:
    id: int
    left: float
    right: float
    birth: float
    death: float | None
    parent: int | None

    @property
    def length(self):
        return self.right - self.left


@dataclass(frozen=True)
class Event:
    t: float
    parent: int
    children: OpenSet
    dust: float
    child_ids: tuple[int, ...]

    def to_dict(self):
        return {"t": self.t, "parent": self.parent, "children": [list(p) for p in self.children.pairs()],
                "dust": self.dust}


class FragmentationPath:
    """Genealogy of an interval fragmentation on ``[0, horizon]``."""

    def __init__(self, horizon: float, erosion: Erosion | None = None,
                 chars: FragmentationCharacteristics | None = None):
        self.horizon = float(horizon)
        self.erosion = erosion or NoErosion()
        self.chars = chars
        self.fragments: list[Fragment] = [Fragment(0, 0.0, 1.0, 0.0, None, None)]
        self.events: list[Event] = []
        self._arrays = None

    def __repr__(self):
        return f"FragmentationPath(horizon={self.horizon}, events={len(self.events)}, fragments={len(self.fragments)})"

    def add_event(self, t: float, parent: int, children: OpenSet, dust: float) -> tuple[int, ...]:
        frag = self.fragments[parent]
        if frag.death is not None:
            raise ValueError(f"fragment {parent} is already dead")
        frag.death = t
        ids = []
        for a, b in children.pairs():
            fid = len(self.fragments)
            self.fragments.append(Fragment(fid, a, b, t, None, parent))
            ids.append(fid)
        self.events.append(Event(t, parent, children, dust, tuple(ids)))
        self._arrays = None
        return tuple(ids)

    def live_window(self, fid: int, t: float) -> Interval:
        f = self.fragments[fid]
        l, r = self.erosion.window(f.birth, t)
        w = f.length
        return Interval(f.left + float(l) * w, f.right - float(r) * w)

    def _arrays_cached(self):
        if self._arrays is None:
            fr = self.fragments
            self._arrays = (
                np.array([f.left for f in fr]), np.array([f.right for f in fr]),
                np.array([f.birth for f in fr]),
                np.array([math.inf if f.death is None else f.death for f in fr]),
            )
        return self._arrays

    def alive(self, t: float) -> np.ndarray:
        _, _, births, deaths = self._arrays_cached()
        return np.flatnonzero((births <= t) & (t < deaths))

    def state(self, t: float) -> OpenSet:
        """Open set at time ``t`` (states at an event time are post-event)."""
        if t < 0 or t > self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        lefts, rights, births, _ = self._arrays_cached()
        idx = self.alive(t)
        if self.erosion.zero:
            a, b = lefts[idx], rights[idx]
        else:
            l, r = self.erosion.window(births[idx], np.full(idx.size, t))
            w = rights[idx] - lefts[idx]
            a, b = lefts[idx] + l * w, rights[idx] - r * w
        keep = b - a > 0.0
        order = np.argsort(a[keep], kind="stable")
        return OpenSet(a[keep][order], b[keep][order])

    def event_times(self) -> np.ndarray:
        return np.array([e.t for e in self.events])

    def leaves(self) -> list[Fragment]:
        return [f for f in self.fragments if f.death is None]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str, horizon: float, erosion: Erosion | None = None,
                   chars: FragmentationCharacteristics | None = None) -> "FragmentationPath":
        path = cls(horizon, erosion, chars)
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                path.add_event(d["t"], d["parent"], OpenSet.from_pairs(d["children"]), d["dust"])
        return path


def _run(path: FragmentationPath, rate_bound: float, accept: Callable[[float], float] | None,
         draw: Callable[[float, np.random.Generator], OpenSet], rng: np.random.Generator,
         floor: float, max_fragments: int) -> FragmentationPath:
    # global event heap keyed by (time, fragment id); ties resolve by id
    if rate_bound <= 0.0:
        return path
    heap = [(rng.exponential(1.0 / rate_bound), 0)]
    horizon = path.horizon
    while heap:
        t, fid = heapq.heappop(heap)
        if t > horizon:
            break
        if accept is not None and rng.random() >= accept(t):
            heapq.heappush(heap, (t + rng.exponential(1.0 / rate_bound), fid))
            continue
        win = path.live_window(fid, t)
        V = draw(t, rng)
        children = embed(win, V, floor)
        dust = max(0.0, win.length - children.measure)
        ids = path.add_event(t, fid, children, dust)
        if len(path.fragments) > max_fragments:
            raise TooManyFragmentsError(f"more than {max_fragments} fragments; shorten the horizon "
                                        "or raise the truncation threshold")
        for cid in ids:
            heapq.heappush(heap, (t + rng.exponential(1.0 / rate_bound), cid))
    return path


def simulate_homogeneous(chars: FragmentationCharacteristics, horizon: float, rng: np.random.Generator,
                         delta: float | None = None, floor: float = FLOOR,
                         max_fragments: int = DEFAULT_MAX_FRAGMENTS) -> FragmentationPath:
    """Interval fragmentation path with characteristics ``chars`` (alpha must be 0)."""
    if chars.alpha != 0.0:
        raise ValueError("simulate_homogeneous needs alpha = 0; use time_change afterwards")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    path = FragmentationPath(horizon, make_erosion(chars), chars)
    nu = chars.nu
    rate = nu.truncated_mass(delta) if nu is not None else 0.0
    if rate == 0.0 and chars.c == 0.0:
        warnings.warn("no dislocation and no erosion: the path is constant", DegeneratePathWarning)
    if rate == 0.0:
        return path
    return _run(path, rate, None, lambda t, g: nu.sample(g, delta), rng, floor, max_fragments)


@dataclass
class InhomogeneousCharacteristics:
    """Time-dependent dislocation ``nu_at(t)`` with a dominating rate, plus erosion rates."""

    nu_at: Callable[[float], DislocationMeasure | None]
    rate_bound: float
    c_l_fn: Callable[[float], float] = lambda u: 0.0
    c_r_fn: Callable[[float], float] = lambda u: 0.0
    breakpoints: tuple[float, ...] = ()
    delta: float | None = None


def simulate_inhomogeneous(ichars: InhomogeneousCharacteristics, horizon: float, rng: np.random.Generator,
                           floor: float = FLOOR, max_fragments: int = DEFAULT_MAX_FRAGMENTS) -> FragmentationPath:
    """Time-inhomogeneous path by thinning clocks of rate ``rate_bound``."""
    erosion = InhomogeneousErosion(ichars.c_l_fn, ichars.c_r_fn, ichars.breakpoints)
    path = FragmentationPath(horizon, erosion)
    bound = ichars.rate_bound

    def accept(t):
        nu = ichars.nu_at(t)
        m = 0.0 if nu is None else nu.truncated_mass(ichars.delta)
        if m > bound * (1.0 + 1e-12):
            raise ValueError(f"dislocation rate {m} at t={t} exceeds the supplied bound {bound}")
        return m / bound

    return _run(path, bound, accept, lambda t, g: ichars.nu_at(t).sample(g, ichars.delta), rng, floor, max_fragments)


# self-similar time change


def time_change(path: FragmentationPath, alpha: float) -> FragmentationPath:
    """Self-similar time change with index ``alpha`` of an uneroded path.

    Along a branch the size is piecewise constant, so ``∫ |I|^(-alpha)`` is
    piecewise linear and each old event time maps to the sum of ancestral
    durations weighted by ``length^(-alpha)``.  The new horizon is the
    smallest mapped horizon over the fragments alive at the old horizon.
    """
    if not path.erosion.zero:
        raise ValueError("time change of eroded paths is not supported")
    if alpha == 0.0:
        out = FragmentationPath.from_jsonl(path.to_jsonl(), path.horizon, chars=path.chars)
        return out
    new_birth = {0: 0.0}
    for f in path.fragments[1:]:
        p = path.fragments[f.parent]
        new_birth[f.id] = new_birth[p.id] + (f.birth - p.birth) * p.length ** (-alpha)
    H = path.horizon
    leaf_h = [new_birth[f.id] + (H - f.birth) * f.length ** (-alpha) for f in path.leaves()]
    new_h = min(leaf_h) if leaf_h else H
    mapped = []
    for e in path.events:
        p = path.fragments[e.parent]
        t_new = new_birth[p.id] + (e.t - p.birth) * p.length ** (-alpha)
        if t_new <= new_h:
            mapped.append((t_new, e))
    mapped.sort(key=lambda te: (te[0], te[1].parent))
    chars = path.chars
    if chars is not None:
        chars = FragmentationCharacteristics(chars.nu, chars.c_l, chars.c_r, alpha)
    out = FragmentationPath(new_h, chars=chars)
    rename = {0: 0}
    for t_new, e in mapped:
        ids = out.add_event(t_new, rename[e.parent], e.children, e.dust)
        rename.update(zip(e.child_ids, ids))
    return out


def simulate_self_similar(chars: FragmentationCharacteristics, horizon: float, rng: np.random.Generator,
                          delta: float | None = None, **kw) -> FragmentationPath:
    """Homogeneous path time-changed by ``chars.alpha`` (requires alpha >= 0).

    For alpha >= 0 mapped times are at least the original ones, so simulating
    the homogeneous path to ``horizon`` covers the new path on ``[0, horizon]``.
    """
    if chars.alpha < 0:
        raise ValueError("negative alpha needs an explicit homogeneous horizon")
    base = simulate_homogeneous(FragmentationCharacteristics(chars.nu, chars.c_l, chars.c_r, 0.0),
                                horizon, rng, delta, **kw)
    out = time_change(base, chars.alpha)
    return truncate(out, horizon)


def truncate(path: FragmentationPath, horizon: float) -> FragmentationPath:
    if horizon > path.horizon:
        raise ValueError("cannot extend a path beyond its horizon")
    out = FragmentationPath(horizon, path.erosion, path.chars)
    for e in path.events:
        if e.t > horizon:
            break
        out.add_event(e.t, e.parent, e.children, e.dust)
    return out


# composition paths


def sample_composition_path(path: FragmentationPath, n: int, rng: np.random.Generator,
                            uniforms: np.ndarray | None = None) -> list[tuple[float, Composition]]:
    """Paintbox compositions of [n] at time 0 and after every event, with frozen uniforms."""
    x = rng.random(n) if uniforms is None else np.asarray(uniforms, dtype=float)
    times = [0.0] + [e.t for e in path.events]
    return [(t, compose_from_uniforms(path.state(t), x)) for t in times]


def composition_at(path: FragmentationPath, t: float, uniforms: np.ndarray) -> Composition:
    return compose_from_uniforms(path.state(t), uniforms)


def simulate_composition(chars: FragmentationCharacteristics, n: int, horizon: float, rng: np.random.Generator,
                         delta: float | None = None) -> list[tuple[float, Composition]]:
    """Composition fragmentation of [n] built directly at the level of blocks.

    Each block of size k at least 2 is dislocated at rate ``m_delta`` (its
    elements are painted by a fresh sampled open set) and loses each element
    at rate ``c_l + c_r``; an eroded element becomes a singleton placed right
    next to its block, on the left with probability ``c_l / c``.
    """
    nu = chars.nu
    m = nu.truncated_mass(delta) if nu is not None else 0.0
    c = chars.c
    # each block is a list of sorted elements, with singleton stacks on either side
    state: list[tuple[int, ...]] = [tuple(range(1, n + 1))]
    out = [(0.0, Composition(n, tuple(state)))]
    t = 0.0
    while True:
        sizes = np.array([len(b) for b in state])
        active = sizes >= 2
        rates = np.where(active, m + sizes * c, 0.0)
        total = rates.sum()
        if total <= 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t > horizon:
            break
        k = int(rng.choice(len(state), p=rates / total))
        block = state[k]
        size = len(block)
        if rng.random() * (m + size * c) < m:
            V = nu.sample(rng, delta)
            g = compose_from_uniforms(V, rng.random(size))
            new = [tuple(block[i - 1] for i in b) for b in g.blocks]
            new = [tuple(sorted(b)) for b in new]
            state[k:k + 1] = new
        else:
            i = int(rng.integers(size))
            elem = block[i]
            rest = block[:i] + block[i + 1:]
            if rng.random() * c < chars.c_l:
                state[k:k + 1] = [(elem,), rest]
            else:
                state[k:k + 1] = [rest, (elem,)]
        out.append((t, Composition(n, tuple(state))))
    return out


def composition_state_at(history: list[tuple[float, Composition]], t: float) -> Composition:
    times = [s for s, _ in history]
    i = int(np.searchsorted(times, t, side="right")) - 1
    return history[i][1]


# tagged fragments


@dataclass
class TaggedFragmentRecord:
    """Sizes of the fragment containing a tagged point.

    ``times[i]`` is the birth time of the i-th fragment on the lineage and
    ``sizes[i]`` its length at birth; in between, erosion shrinks it.
    """

    times: np.ndarray
    sizes: np.ndarray
    kill_time: float
    horizon: float
    erosion: Erosion = field(default_factory=NoErosion)

    def size_at(self, t: float) -> float:
        if t >= self.kill_time:
            return 0.0
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if self.erosion.zero:
            return float(self.sizes[i])
        l, r = self.erosion.window(float(self.times[i]), t)
        return float(self.sizes[i]) * max(0.0, 1.0 - float(l) - float(r))

    def sigma_at(self, t: float) -> float:
        s = self.size_at(t)
        return math.inf if s <= 0.0 else -math.log(s)


def tagged_fragment(path: FragmentationPath, rng: np.random.Generator, v: float | None = None) -> TaggedFragmentRecord:
    """Follow the fragment containing a uniform point through the genealogy."""
    x = rng.random() if v is None else v
    times, sizes = [0.0], [1.0]
    fid = 0
    er = path.erosion
    kill = math.inf
    by_parent = {e.parent: e for e in path.events}
    while True:
        f = path.fragments[fid]
        rel = (x - f.left) / f.length
        end = path.horizon if f.death is None else f.death
        k = er.kill_time(f.birth, rel, end) if not er.zero else math.inf
        if k <= end:
            kill = k
            break
        if f.death is None:
            break
        e = by_parent[fid]
        nxt = None
        for cid in e.child_ids:
            c = path.fragments[cid]
            if c.left < x < c.right:
                nxt = cid
                break
        if nxt is None:
            kill = e.t
            break
        fid = nxt
        times.append(e.t)
        sizes.append(path.fragments[fid].length)
    return TaggedFragmentRecord(np.array(times), np.array(sizes), kill, path.horizon, er)


def simulate_tagged_lineage(chars: FragmentationCharacteristics, horizon: float, rng: np.random.Generator,
                            delta: float | None = None) -> TaggedFragmentRecord:
    """Simulate only the lineage of a tagged uniform point.

    Equivalent in law to ``tagged_fragment(simulate_homogeneous(...))`` but
    costs one clock per generation, so infinite-activity measures can be run
    at small truncation thresholds.
    """
    nu = chars.nu
    rate = nu.truncated_mass(delta) if nu is not None else 0.0
    er = make_erosion(chars)
    v = rng.random()
    size, birth = 1.0, 0.0
    times, sizes = [0.0], [1.0]
    kill = math.inf
    while True:
        t = birth + (rng.exponential(1.0 / rate) if rate > 0 else math.inf)
        end = min(t, horizon)
        k = er.kill_time(birth, v, end) if not er.zero else math.inf
        if k <= end:
            kill = k
            break
        if t > horizon:
            break
        l, r = er.window(birth, t)
        l, r = float(l), float(r)
        w = 1.0 - l - r
        u = (v - l) / w
        V = nu.sample(rng, delta)
        i = V.component_at(u)
        if i < 0:
            kill = t
            break
        a, b = float(V.lefts[i]), float(V.rights[i])
        v = (u - a) / (b - a)
        size *= w * (b - a)
        birth = t
        times.append(t)
        sizes.append(size)
    return TaggedFragmentRecord(np.array(times), np.array(sizes), kill, horizon, er)
