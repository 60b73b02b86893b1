"""Experiment runners: replicate functions, summaries and report files."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import brownian, dimension, engine, ruelle
from .compositions import Composition
from .config import ExperimentConfig
from .intervals import OpenSet, ranked_lengths
from .measures import FragmentationCharacteristics, laplace_exponent, measure_from_config
from .paintbox import compose_from_uniforms, exact_composition_law
from .stats import binomial_se, chi_square, ks_critical, ks_test, log_moment, mean_se
from .streams import replicate_map


@dataclass
class Report:
    summary: dict
    rows: list[dict]

    def csv_text(self) -> str:
        if not self.rows:
            return ""
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True, default=_jsonable) + "\n"

    def write(self, out: str | Path) -> Path:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.json_text())
        (out / "raw.csv").write_text(self.csv_text())
        return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serialisable: {type(v)}")


def _est(mean, se, **extra):
    return {"estimate": mean, "se": se, **extra}


def _chars(p) -> FragmentationCharacteristics:
    nu = measure_from_config(p.measure)
    if nu is not None and hasattr(p, "delta"):
        nu.delta = p.delta
    return FragmentationCharacteristics(nu, getattr(p, "c_l", 0.0), getattr(p, "c_r", 0.0))


# simulate


def _simulate(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    chars = _chars(p)

    def rep(r, rng):
        path = engine.simulate_homogeneous(chars, p.horizon, rng, p.delta)
        if p.alpha:
            path = engine.truncate(engine.time_change(path, p.alpha), p.horizon)
        U = path.state(p.horizon)
        first = path.events[0].t if path.events else math.inf
        return {"replicate": r, "n_events": len(path.events), "n_fragments": len(U),
                "mass": U.measure, "first_event": first}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "simulate", cfg.workers)
    summary = {"experiment": "simulate", "config": cfg.to_dict()}
    for key in ("n_fragments", "mass", "n_events"):
        summary[key] = _est(*mean_se([r[key] for r in rows]))
    return Report(summary, rows)


# paintbox


def _paintbox(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    U = OpenSet.from_pairs(p.open_set)

    def rep(r, rng):
        return {"replicate": r, "composition": repr(compose_from_uniforms(U, rng.random(p.n)))}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "paintbox", cfg.workers)
    law = exact_composition_law(U, p.n)
    counts = {}
    for row in rows:
        counts[row["composition"]] = counts.get(row["composition"], 0) + 1
    keys = sorted(law, key=repr)
    freqs = {}
    for g in keys:
        k = repr(g)
        f = counts.get(k, 0) / cfg.reps
        freqs[k] = {"frequency": f, "se": binomial_se(law[g], cfg.reps), "exact": law[g]}
    obs = [counts.get(repr(g), 0) for g in keys]
    exp = [law[g] for g in keys]
    test = chi_square(obs, exp) if len(keys) > 1 else None
    summary = {"experiment": "paintbox", "config": cfg.to_dict(), "frequencies": freqs,
               "chi_square_p": None if test is None else test.p_value,
               "unexpected": sorted(set(counts) - {repr(g) for g in keys})}
    return Report(summary, rows)


# laplace


def _laplace(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    chars = _chars(p)

    def rep(r, rng):
        if p.lineage_only:
            rec = engine.simulate_tagged_lineage(chars, p.t, rng, p.delta)
        else:
            rec = engine.tagged_fragment(engine.simulate_homogeneous(chars, p.t, rng, p.delta), rng)
        return {"replicate": r, "size": rec.size_at(p.t)}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "laplace", cfg.workers)
    sizes = np.array([r["size"] for r in rows])
    out = {}
    for q in p.q:
        est, se = log_moment(sizes ** q, p.t)
        exact = laplace_exponent(chars, q, p.delta)
        out[repr(float(q))] = {"estimate": est, "se": se, "phi": exact,
                               "z": (est - exact) / se if se > 0 else math.nan}
    return Report({"experiment": "laplace", "config": cfg.to_dict(), "phi": out}, rows)


# erosion


def left_singletons(gamma: Composition) -> int:
    """Number of singleton blocks before the largest block."""
    sizes = gamma.block_sizes
    big = int(np.argmax(sizes))
    return sum(1 for s in sizes[:big] if s == 1)


def _erosion(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    chars = FragmentationCharacteristics(None, p.c_l, p.c_r)

    def rep(r, rng):
        path = engine.simulate_homogeneous(chars, max(p.t, 1e-300), rng)
        g = compose_from_uniforms(path.state(p.t), rng.random(p.n))
        return {"replicate": r, "left_fraction": left_singletons(g) / p.n}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "erosion", cfg.workers)
    c = p.c_l + p.c_r
    exact = p.c_l / c * -math.expm1(-c * p.t)
    vals = [r["left_fraction"] for r in rows]
    if len(vals) > 1:
        m, se = mean_se(vals)
    else:
        m = vals[0]
        se = math.sqrt(exact * (1 - exact) / p.n)
    return Report({"experiment": "erosion", "config": cfg.to_dict(),
                   "left_fraction": _est(m, se, exact=exact)}, rows)


# time change


def _timechange(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    chars = _chars(p)

    def rep(r, rng):
        path = engine.simulate_homogeneous(chars, p.horizon, rng)
        new = engine.time_change(path, p.alpha)
        return {"replicate": r, "n_events": len(path.events), "n_events_mapped": len(new.events),
                "first_event": path.events[0].t if path.events else math.inf,
                "first_event_mapped": new.events[0].t if new.events else math.inf,
                "horizon_mapped": new.horizon}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "timechange", cfg.workers)
    summary = {"experiment": "timechange", "config": cfg.to_dict()}
    for key in ("n_events", "n_events_mapped", "horizon_mapped"):
        summary[key] = _est(*mean_se([r[key] for r in rows]))
    return Report(summary, rows)


# brownian


def _brownian(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    summary = {"experiment": "brownian", "config": cfg.to_dict()}
    if p.mode == "first_split":
        def rep(r, rng):
            e = brownian.sample_excursion(p.m, rng)
            res = brownian.first_split(e, p.min_share)
            x = math.nan if res is None else res[0] / (res[0] + res[1])
            return {"replicate": r, "left_share": x}

        rows = replicate_map(rep, cfg.reps, cfg.seed, "brownian", cfg.workers)
        x = np.array([r["left_share"] for r in rows])
        bins = brownian.first_split_left_bias(x[np.isfinite(x)])
        summary["skipped"] = int(np.sum(~np.isfinite(x)))
        summary["bins"] = [b.__dict__ | {"z": b.z} for b in bins]
        return Report(summary, rows)

    if p.mode == "dimension":
        eps = np.array(p.eps, dtype=float)

        def rep(r, rng):
            U = brownian.ap_state(brownian.sample_excursion(p.m, rng), p.t)
            cs = dimension.covering_stats(U, eps)
            return {"replicate": r, "N": json.dumps(cs.N.tolist()), "M": json.dumps(cs.M.tolist()),
                    "Z": json.dumps(cs.Z.tolist()), "bound_ok": bool(dimension.covering_bound_holds(cs).all())}

        rows = replicate_map(rep, cfg.reps, cfg.seed, "brownian", cfg.workers)
        avg = dimension.CoveringStats(eps, *(np.mean([json.loads(r[k]) for r in rows], axis=0) for k in "NMZ"))
        est = dimension.estimate_dimension(avg, (float(eps.min()), float(eps.max())))
        summary["dimension"] = est.to_dict()
        summary["covering_bound_ok"] = all(r["bound_ok"] for r in rows)
        return Report(summary, rows)

    def rep(r, rng):
        e = brownian.sample_excursion(p.m, rng)
        U = brownian.ap_state(e, p.t)
        left = brownian.leftmost_fragment_length(U, warn=False) if len(U) else 0.0
        return {"replicate": r, "t": p.t, "n_components": len(U), "leftmost": left,
                "masses_json": json.dumps(ranked_lengths(U).masses[:20].tolist())}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "brownian", cfg.workers)
    x = np.array([r["leftmost"] for r in rows])
    summary["leftmost"] = _est(*mean_se(x))
    if p.t > 0 and x.size >= 10:
        ks = ks_test(x, lambda v: brownian.rho_cdf(v, p.t))
        summary["leftmost_ks"] = {"statistic": ks.statistic, "p_value": ks.p_value,
                                  "critical_1pct": ks_critical(x.size)}
    return Report(summary, rows)


# ruelle


def _ruelle(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    t1, t2 = p.times

    def rep(r, rng):
        res = ruelle.semigroup_samples(p.t0, t1, t2, p.sticks, rng, p.resolution, p.control)
        row = {"replicate": r, "one_largest": res[0][0], "one_sumsq": res[0][1],
               "two_largest": res[1][0], "two_sumsq": res[1][1]}
        if p.control:
            row |= {"control_largest": res[2][0], "control_sumsq": res[2][1]}
        return row

    rows = replicate_map(rep, cfg.reps, cfg.seed, "ruelle", cfg.workers)
    triples = [[(r["one_largest"], r["one_sumsq"]), (r["two_largest"], r["two_sumsq"])]
               + ([(r["control_largest"], r["control_sumsq"])] if p.control else []) for r in rows]
    rep_ = ruelle.semigroup_report(p.t0, t1, t2, triples) if cfg.reps >= 2 else None
    summary = {"experiment": "ruelle", "config": cfg.to_dict(),
               "sumsq_one_step": _est(*mean_se([r["one_sumsq"] for r in rows]), exact=1 - t2) if cfg.reps >= 2 else None,
               "semigroup": None if rep_ is None else rep_.to_dict()}
    return Report(summary, rows)


# dimension


def _dimension(cfg: ExperimentConfig) -> Report:
    p = cfg.params
    if p.eps is not None:
        eps = np.array(p.eps, dtype=float)
    elif p.source == "cantor":
        eps = np.array([3.0 ** -j / 2 for j in range(1, p.depth + 1)])
    else:
        eps = np.array([2.0 ** -k for k in range(4, 17)])

    def rep(r, rng):
        if p.source == "cantor":
            U = dimension.cantor_set(p.depth)
        elif p.source == "stable":
            U = dimension.stable_range(rng, p.eta)
        else:
            U = brownian.ap_state(brownian.sample_excursion(p.m, rng), p.t)
        cs = dimension.covering_stats(U, eps)
        return {"replicate": r, "N": json.dumps(cs.N.tolist()), "M": json.dumps(cs.M.tolist()),
                "Z": json.dumps(cs.Z.tolist()), "bound_ok": bool(dimension.covering_bound_holds(cs).all())}

    rows = replicate_map(rep, cfg.reps, cfg.seed, "dimension", cfg.workers)
    avg = dimension.CoveringStats(eps, *(np.mean([json.loads(r[k]) for r in rows], axis=0) for k in "NMZ"))
    fit = tuple(p.fit_range) if p.fit_range else None
    est = dimension.estimate_dimension(avg, fit)
    summary = {"experiment": "dimension", "config": cfg.to_dict(), "dimension": est.to_dict(),
               "covering_bound_ok": all(r["bound_ok"] for r in rows),
               "eps": eps.tolist()}
    return Report(summary, rows)


RUNNERS = {
    "simulate": _simulate,
    "paintbox": _paintbox,
    "laplace": _laplace,
    "erosion": _erosion,
    "timechange": _timechange,
    "brownian": _brownian,
    "ruelle": _ruelle,
    "dimension": _dimension,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.experiment](cfg)
