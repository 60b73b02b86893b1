"""Dislocation measures, fragmentation characteristics and the Laplace exponent.

Three families are supported:

* :class:`DiscreteAtoms` -- finitely many weighted open sets;
* :class:`BinarySplitDensity` -- a density ``f(x)`` for the split
  ``(0, x) ∪ (x, 1)``, possibly with infinite total mass near 0 and 1;
* ranked measures lifted by uniform random order (:class:`RankedAtoms`,
  :class:`RankedBinaryDensity`, :class:`PoissonDirichletLift`).

Infinite-activity measures are simulated after truncation to
``{U : 1 - s_1 >= delta}`` where ``s_1`` is the largest component length.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate, special

from .intervals import MassPartition, OpenSet, ranked_lengths
from .paintbox import uniform_order_lift

DEFAULT_DELTA = 1e-4
KNOT_SPACING = 1e-4


class DivergentIntegralError(ValueError):
    """An integral against the measure does not converge."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


# quadrature with square-root substitution at both endpoints


def _quad(fn, a, b, epsrel):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, a, b, epsrel=epsrel, epsabs=0.0, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def integrate_unit(g: Callable[[float], float], a: float, b: float, epsrel: float = 1e-10) -> float:
    """Integrate ``g`` over ``[a, b] ⊂ [0, 1]``.

    Substitutes ``x = u**2`` on the half touching 0 and ``x = 1 - v**2`` on the
    half touching 1 so that ``x**-1/2`` type endpoint singularities become
    smooth.
    """
    if b <= a:
        return 0.0
    total = 0.0
    lo, hi = a, min(b, 0.5)
    if hi > lo:
        total += _quad(lambda u: 2.0 * u * g(u * u), math.sqrt(lo), math.sqrt(hi), epsrel)
    lo, hi = max(a, 0.5), b
    if hi > lo:
        total += _quad(lambda v: 2.0 * v * g(1.0 - v * v), math.sqrt(1.0 - hi), math.sqrt(1.0 - lo), epsrel)
    return total


def _tail_diverges(g: Callable[[float], float], side: str) -> bool:
    # decade blocks [1e-9,1e-6], [1e-12,1e-9], [1e-15,1e-12] toward the endpoint;
    # a convergent power-law tail shrinks geometrically from one block to the next
    def block(k):
        lo, hi = math.log(10.0 ** (-3 * (k + 1))), math.log(10.0 ** (-3 * k))
        if side == "left":
            fn = lambda y: abs(g(math.exp(y))) * math.exp(y)
        else:
            fn = lambda y: abs(g(1.0 - math.exp(y))) * math.exp(y)
        val, _ = integrate.quad(fn, lo, hi, limit=200)
        return val

    t3, t4 = block(3), block(4)
    return t3 > 0.0 and t4 >= 0.9 * t3


def _q1m(x: np.ndarray | float, p: float):
    # 1 - (1 - x)**p without cancellation for small x
    return -np.expm1(p * np.log1p(-x))


# measures


class DislocationMeasure:
    """Interface shared by the measure variants."""

    delta: float = DEFAULT_DELTA
    conservative: bool = True

    def truncated_mass(self, delta: float | None = None) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, delta: float | None = None) -> OpenSet:
        raise NotImplementedError

    def laplace_integral(self, q: float, delta: float | None = None) -> float:
        """``∫ (1 - Σ |U_i|^(q+1)) ν(dU)``, optionally over the truncated region."""
        raise NotImplementedError

    def h(self, eps: float) -> float:
        """``∫ (#{i : |U_i| >= eps} - 1)^+ ν(dU)``."""
        raise NotImplementedError

    def integrability(self) -> float:
        """``∫ (1 - s_1) ν(dU)``; finite for every dislocation measure."""
        raise NotImplementedError

    def _delta(self, delta):
        d = self.delta if delta is None else delta
        if not 0.0 < d < 1.0:
            raise ValueError(f"truncation delta must lie in (0, 1), got {d}")
        return d


class DiscreteAtoms(DislocationMeasure):
    def __init__(self, atoms: Sequence[tuple[float, OpenSet]], delta: float = DEFAULT_DELTA):
        atoms = tuple((float(w), U) for w, U in atoms)
        if not atoms:
            raise ValueError("need at least one atom")
        for w, U in atoms:
            if w <= 0.0:
                raise ValueError("atom weights must be positive")
            if U == OpenSet.unit():
                raise ValueError("a dislocation measure cannot charge (0, 1) itself")
        self.atoms = atoms
        self.delta = delta
        self._ranked = [ranked_lengths(U) for _, U in atoms]
        self._weights = np.array([w for w, _ in atoms])
        self._gap = np.array([1.0 - (r.masses[0] if len(r) else 0.0) for r in self._ranked])
        self.conservative = all(r.dust <= 1e-12 for r in self._ranked)

    def __repr__(self):
        return f"DiscreteAtoms({list(self.atoms)!r})"

    def _kept(self, delta):
        return self._gap >= self._delta(delta)

    def truncated_mass(self, delta=None):
        return math.fsum(self._weights[self._kept(delta)].tolist())

    def sample(self, rng, delta=None):
        kept = np.flatnonzero(self._kept(delta))
        if kept.size == 0:
            raise ValueError("truncated measure is empty")
        w = self._weights[kept]
        i = kept[rng.choice(kept.size, p=w / w.sum())] if kept.size > 1 else kept[0]
        return self.atoms[i][1]

    def laplace_integral(self, q, delta=None):
        mask = np.ones(len(self.atoms), bool) if delta is None else self._kept(delta)
        terms = [w * (1.0 - math.fsum((r.masses ** (q + 1.0)).tolist()))
                 for (w, _), r, keep in zip(self.atoms, self._ranked, mask) if keep]
        return math.fsum(terms)

    def h(self, eps):
        return math.fsum(w * max(int(np.sum(r.masses >= eps)) - 1, 0)
                         for (w, _), r in zip(self.atoms, self._ranked))

    def integrability(self):
        return float(np.dot(self._weights, self._gap))


class BinarySplitDensity(DislocationMeasure):
    """Measure with density ``f(x) dx`` on the sets ``(0, x) ∪ (x, 1)``.

    ``x`` is the length of the left piece.  ``f`` must accept numpy arrays.
    """

    def __init__(self, density: Callable[[np.ndarray], np.ndarray], name: str = "binary",
                 delta: float = DEFAULT_DELTA):
        self.density = density
        self.name = name
        self.delta = delta
        self._cdf_cache: dict[float, tuple[float, interpolate.PchipInterpolator]] = {}
        self._checked = False

    def __repr__(self):
        return f"BinarySplitDensity({self.name!r}, delta={self.delta})"

    def _f(self, x: float) -> float:
        return float(self.density(np.asarray(x, dtype=float)))

    def check(self):
        """Raise :class:`DivergentIntegralError` unless ``∫ min(x, 1-x) f(x) dx < ∞``."""
        if self._checked:
            return
        g = lambda x: min(x, 1.0 - x) * self._f(x)
        for side in ("left", "right"):
            if _tail_diverges(g, side):
                raise DivergentIntegralError(f"{self.name}: ∫(1 - s1) dν diverges at the {side} end")
        self._checked = True

    def integrability(self):
        self.check()
        return integrate_unit(lambda x: min(x, 1.0 - x) * self._f(x), 0.0, 1.0)

    def truncated_mass(self, delta=None):
        d = self._delta(delta)
        if d >= 0.5:
            return 0.0
        return integrate_unit(self._f, d, 1.0 - d)

    def laplace_integral(self, q, delta=None):
        if q < 0:
            raise ValueError("q must be nonnegative")

        def g(x):
            # 1 - x^(q+1) - (1-x)^(q+1) split into two nonnegative terms (no cancellation near 0 or 1)
            if x <= 0.0 or x >= 1.0:
                return 0.0
            return ((1.0 - x) * _q1m(x, q) - x * math.expm1(q * math.log(x))) * self._f(x)

        if delta is None:
            for side in ("left", "right"):
                if _tail_diverges(g, side):
                    raise DivergentIntegralError(f"{self.name}: Laplace integral diverges at the {side} end")
            return integrate_unit(g, 0.0, 1.0)
        d = self._delta(delta)
        return integrate_unit(g, d, 1.0 - d) if d < 0.5 else 0.0

    def h(self, eps):
        # (#pieces >= eps) - 1, clipped at 0, is 1{min(x, 1 - x) >= eps}
        if eps >= 0.5:
            return 0.0 if eps > 0.5 else 0.0
        return integrate_unit(self._f, eps, 1.0 - eps)

    def _knots(self, d: float) -> np.ndarray:
        lo, hi = d, 1.0 - d
        n = int(math.ceil((hi - lo) / KNOT_SPACING))
        uniform = np.linspace(lo, hi, n + 1)
        # geometric refinement where f varies on the scale of the distance to 0 or 1
        reach = min(0.01, 0.5 - d) if d < 0.5 else 0.0
        if reach > d:
            geo = np.geomspace(d, reach, int(math.ceil(math.log(reach / d) / math.log(1.01))) + 1)
            uniform = np.concatenate([uniform, geo, 1.0 - geo])
        knots = np.unique(np.clip(uniform, lo, hi))
        return knots

    def _inverse_cdf(self, d: float):
        if d not in self._cdf_cache:
            knots = self._knots(d)
            nodes, weights = np.polynomial.legendre.leggauss(8)
            a, b = knots[:-1, None], knots[1:, None]
            xs = 0.5 * (b - a) * nodes[None, :] + 0.5 * (a + b)
            cell = 0.5 * (b - a)[:, 0] * (self.density(xs) * weights[None, :]).sum(axis=1)
            cdf = np.concatenate([[0.0], np.cumsum(cell)])
            total = cdf[-1]
            if not total > 0.0:
                raise ValueError("truncated measure is empty")
            cdf /= total
            keep = np.concatenate([[True], np.diff(cdf) > 0.0])
            inv = interpolate.PchipInterpolator(cdf[keep], knots[keep])
            self._cdf_cache[d] = (total, inv)
        return self._cdf_cache[d]

    def sample_split(self, rng: np.random.Generator, size=None, delta=None) -> np.ndarray:
        """Left-piece lengths drawn from the normalised truncated density."""
        d = self._delta(delta)
        if d >= 0.5:
            raise ValueError("truncated measure is empty")
        _, inv = self._inverse_cdf(d)
        u = rng.random(size)
        return np.clip(inv(u), d, 1.0 - d)

    def sample(self, rng, delta=None):
        x = float(self.sample_split(rng, delta=delta))
        return OpenSet([0.0, x], [x, 1.0])


class RankedBinaryDensity(BinarySplitDensity):
    """Ranked binary measure ``g(s_1) ds_1`` on ``[1/2, 1)``, lifted in uniform order.

    The larger piece goes left or right with probability 1/2, so the interval
    density is ``g(max(x, 1 - x)) / 2``.
    """

    def __init__(self, ranked_density: Callable[[np.ndarray], np.ndarray], name: str = "ranked_binary",
                 delta: float = DEFAULT_DELTA):
        self.ranked_density = ranked_density
        super().__init__(lambda x: 0.5 * ranked_density(np.maximum(x, 1.0 - x)), name, delta)


class RankedAtoms(DislocationMeasure):
    """Finitely many weighted proper mass partitions, lifted in uniform random order."""

    def __init__(self, atoms: Sequence[tuple[float, MassPartition]], delta: float = DEFAULT_DELTA):
        self.atoms = tuple((float(w), s) for w, s in atoms)
        for w, s in self.atoms:
            if w <= 0.0:
                raise ValueError("atom weights must be positive")
            if s.dust > 1e-9:
                raise ValueError("ranked atoms must be proper (zero dust) to be lifted")
            if len(s) == 1 and s.masses[0] >= 1.0 - 1e-12:
                raise ValueError("a dislocation measure cannot charge the trivial partition")
        self.delta = delta
        self._weights = np.array([w for w, _ in self.atoms])
        self._gap = np.array([1.0 - s.masses[0] for _, s in self.atoms])

    def _kept(self, delta):
        return self._gap >= self._delta(delta)

    def truncated_mass(self, delta=None):
        return math.fsum(self._weights[self._kept(delta)].tolist())

    def sample(self, rng, delta=None):
        kept = np.flatnonzero(self._kept(delta))
        if kept.size == 0:
            raise ValueError("truncated measure is empty")
        w = self._weights[kept]
        i = kept[rng.choice(kept.size, p=w / w.sum())]
        return uniform_order_lift(self.atoms[i][1], rng)

    def laplace_integral(self, q, delta=None):
        mask = np.ones(len(self.atoms), bool) if delta is None else self._kept(delta)
        return math.fsum(w * (1.0 - float(np.sum(s.masses ** (q + 1.0))))
                         for (w, s), keep in zip(self.atoms, mask) if keep)

    def h(self, eps):
        return math.fsum(w * max(int(np.sum(s.masses >= eps)) - 1, 0) for w, s in self.atoms)

    def integrability(self):
        return float(np.dot(self._weights, self._gap))


class PoissonDirichletLift(DislocationMeasure):
    """``rate`` times the uniform-order lift of PD(alpha, theta).

    The measure is finite, so the truncation threshold is not applied.
    Sampling uses ``sticks`` residual-allocation sticks with the leftover mass
    folded back proportionally.
    """

    def __init__(self, alpha: float, theta: float, rate: float = 1.0, sticks: int = 1000,
                 delta: float = DEFAULT_DELTA):
        _check_pd(alpha, theta)
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.alpha, self.theta, self.rate, self.sticks = alpha, theta, rate, sticks
        self.delta = delta

    def __repr__(self):
        return f"PoissonDirichletLift(alpha={self.alpha}, theta={self.theta}, rate={self.rate})"

    def truncated_mass(self, delta=None):
        self._delta(delta)
        return self.rate

    def sample(self, rng, delta=None):
        s = pd_masses(self.alpha, self.theta, self.sticks, rng)
        return uniform_order_lift(renormalize(s), rng)

    def laplace_integral(self, q, delta=None):
        return self.rate * (1.0 - pd_power_moment(self.alpha, self.theta, q + 1.0))

    def h(self, eps):
        raise NotImplementedError("PD measures have infinitely many fragments; h is not tabulated")

    def integrability(self):
        raise NotImplementedError("no closed form for E[1 - s_1] under PD")


# characteristics and the Laplace exponent


@dataclass(frozen=True)
class FragmentationCharacteristics:
    nu: DislocationMeasure | None = None
    c_l: float = 0.0
    c_r: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.c_l < 0 or self.c_r < 0:
            raise ValueError("erosion coefficients must be nonnegative")

    @property
    def c(self) -> float:
        return self.c_l + self.c_r

    @property
    def trivial(self) -> bool:
        return self.nu is None and self.c == 0.0


def truncated_mass(nu: DislocationMeasure, delta: float | None = None) -> float:
    return nu.truncated_mass(delta)


def sample_atom(nu: DislocationMeasure, rng: np.random.Generator, delta: float | None = None) -> OpenSet:
    return nu.sample(rng, delta)


def laplace_exponent(chars: FragmentationCharacteristics, q: float, delta: float | None = None) -> float:
    """Laplace exponent ``(c_l + c_r)(q + 1) + ∫ (1 - Σ|U_i|^(q+1)) ν(dU)``.

    With ``delta`` the integral runs over the truncated measure actually
    simulated at that threshold.
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    val = chars.c * (q + 1.0)
    if chars.nu is not None:
        val += chars.nu.laplace_integral(q, delta)
    return val


# Poisson-Dirichlet sticks


def _check_pd(alpha, theta):
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"PD alpha must lie in [0, 1), got {alpha}")
    if not theta > -alpha:
        raise ValueError(f"PD theta must exceed -alpha, got theta={theta}, alpha={alpha}")


def gem_sticks(alpha: float, theta: float, k: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """First ``k`` GEM(alpha, theta) weights (last axis), unranked."""
    _check_pd(alpha, theta)
    if k < 1:
        raise ValueError("need at least one stick")
    i = np.arange(1, k + 1)
    shape = (k,) if size is None else (*np.atleast_1d(size), k)
    v = rng.beta(1.0 - alpha, theta + i * alpha, size=shape)
    remaining = np.cumprod(1.0 - v, axis=-1)
    before = np.concatenate([np.ones((*shape[:-1], 1)), remaining[..., :-1]], axis=-1)
    return v * before


def pd_masses(alpha: float, theta: float, k: int, rng: np.random.Generator) -> MassPartition:
    """Ranked PD(alpha, theta) masses from ``k`` sticks; the unbroken rest is dust."""
    w = gem_sticks(alpha, theta, k, rng)
    w = np.sort(w[w > 0.0])[::-1]
    dust = max(0.0, 1.0 - math.fsum(w.tolist()))
    return MassPartition(w, dust)


def renormalize(s: MassPartition) -> MassPartition:
    """Fold the dust proportionally back into the masses."""
    total = s.total
    if total <= 0.0:
        raise ValueError("cannot renormalise an all-dust partition")
    m = s.masses / total
    return MassPartition(np.minimum(m, 1.0), 0.0)


def pd_expected_residual(alpha: float, theta: float, k: int) -> float:
    """``E[Π_{i<=k} (1 - V_i)]``: expected mass left after ``k`` GEM sticks."""
    _check_pd(alpha, theta)
    i = np.arange(1, k + 1)
    return float(np.exp(np.sum(np.log(theta + i * alpha) - np.log(theta + i * alpha + 1.0 - alpha))))


def pd_power_moment(alpha: float, theta: float, p: float) -> float:
    """``E[Σ s_i^p]`` under PD(alpha, theta) for ``p > alpha``."""
    _check_pd(alpha, theta)
    return math.exp(special.gammaln(theta + 1.0) + special.gammaln(p - alpha)
                    - special.gammaln(theta + p) - special.gammaln(1.0 - alpha))


# presets


def aldous_pitman(delta: float = DEFAULT_DELTA) -> BinarySplitDensity:
    """Interval dislocation measure ``(2π x (1-x)^3)^(-1/2) dx`` (left piece size-biased)."""
    return BinarySplitDensity(lambda x: (2.0 * np.pi * x * (1.0 - x) ** 3) ** -0.5,
                              name="aldous_pitman", delta=delta)


def aldous_pitman_ranked(delta: float = DEFAULT_DELTA) -> RankedBinaryDensity:
    """Ranked form ``(2π s^3 (1-s)^3)^(-1/2) ds`` on ``[1/2, 1)``, uniformly ordered."""
    return RankedBinaryDensity(lambda s: (2.0 * np.pi * s ** 3 * (1.0 - s) ** 3) ** -0.5,
                               name="aldous_pitman_ranked", delta=delta)


def half_split(weight: float = 1.0) -> DiscreteAtoms:
    return DiscreteAtoms([(weight, OpenSet([0.0, 0.5], [0.5, 1.0]))])


def beta_split(a: float, b: float, scale: float = 1.0, delta: float = DEFAULT_DELTA) -> BinarySplitDensity:
    """Binary density ``scale * x^(a-1) (1-x)^(b-1)``."""
    return BinarySplitDensity(lambda x: scale * x ** (a - 1.0) * (1.0 - x) ** (b - 1.0),
                              name=f"beta_split({a},{b})", delta=delta)


PRESETS = {
    "aldous_pitman": aldous_pitman,
    "aldous_pitman_ranked": aldous_pitman_ranked,
    "half_split": half_split,
}


def measure_from_config(spec) -> DislocationMeasure | None:
    """Build a measure from its JSON description (see ``docs/config.md``)."""
    if spec is None:
        return None
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ValueError(f"unknown measure preset {spec!r}")
        return PRESETS[spec]()
    kind = spec.get("type")
    delta = float(spec.get("truncation", DEFAULT_DELTA))
    if kind == "preset" or ("preset" in spec and kind in (None, "binary_density")):
        name = spec["preset"]
        if name not in PRESETS:
            raise ValueError(f"unknown measure preset {name!r}")
        nu = PRESETS[name]()
        if name == "half_split" and "weight" in spec:
            nu = half_split(float(spec["weight"]))
        nu.delta = delta
        return nu
    if kind == "discrete":
        atoms = [(a["weight"], OpenSet.from_pairs(a["set"])) for a in spec["atoms"]]
        return DiscreteAtoms(atoms, delta=delta)
    if kind == "ranked_discrete":
        atoms = [(a["weight"], MassPartition(sorted(a["masses"], reverse=True))) for a in spec["atoms"]]
        return RankedAtoms(atoms, delta=delta)
    if kind == "binary_density":
        a, b = spec["beta"]
        return beta_split(float(a), float(b), float(spec.get("scale", 1.0)), delta=delta)
    if kind == "pd":
        return PoissonDirichletLift(float(spec["alpha"]), float(spec["theta"]),
                                    float(spec.get("rate", 1.0)), int(spec.get("sticks", 1000)), delta=delta)
    raise ValueError(f"unknown measure type {kind!r}")
