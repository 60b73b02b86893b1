"""Acceptance criteria, one test each; every test records a PASS/FAIL line."""
import itertools
import math

import numpy as np

from conftest import record_acceptance
from fragkit import brownian, dimension, ruelle
from fragkit.compositions import enumerate_compositions, frag, restrict
from fragkit.config import parse_config
from fragkit.engine import (FragmentationPath, erosion_state, erosion_state_inhomogeneous, erosion_state_piecewise,
                            simulate_homogeneous, time_change)
from fragkit.experiments import run_experiment
from fragkit.intervals import MassPartition, OpenSet, distance
from fragkit.measures import DiscreteAtoms, FragmentationCharacteristics, aldous_pitman, laplace_exponent
from fragkit.paintbox import empirical_open_set, sample_composition, uniform_order_lift
from fragkit.stats import chi_square, ks_critical, ks_test, mean_se, retry_on_new_seed


def report(num, ok, detail):
    record_acceptance(f"[ACCEPT {num}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def with_retry(check, seed):
    ok, info, seeds = retry_on_new_seed(check, seed)
    return ok, f"{info} seeds={seeds}"


def test_01_frag_restriction_compatibility():
    c3 = enumerate_compositions(3)
    bad = 0
    for g in c3:
        for seq in itertools.product(c3, repeat=3):
            out = frag(g, seq)
            for m in (1, 2):
                bad += restrict(out, m) != frag(restrict(g, m), [restrict(s, m) for s in seq[:m]])
    rng = np.random.default_rng(101)
    c4 = enumerate_compositions(4)
    for _ in range(10_000):
        g = c4[rng.integers(len(c4))]
        seq = [c4[i] for i in rng.integers(len(c4), size=4)]
        out = frag(g, seq)
        for m in (1, 2, 3):
            bad += restrict(out, m) != frag(restrict(g, m), [restrict(s, m) for s in seq[:m]])
    report("01", bad == 0, f"FRAG/restriction: {len(c3)} compositions of [3] exhaustive + 10^4 at n=4, mismatches={bad}")


def test_02_paintbox_law():
    lines = []
    ok_all = True
    for pairs, exact in (([[0, 0.5], [0.5, 1]], (0.5, 0.25, 0.25)), ([[0, 1 / 3], [1 / 3, 1]], (5 / 9, 2 / 9, 2 / 9))):
        def check(seed):
            cfg = parse_config({"experiment": "paintbox", "seed": seed, "reps": 100_000,
                                "params": {"open_set": pairs, "n": 2}})
            f = run_experiment(cfg).summary["frequencies"]
            # cells: {1,2} together, then the two ordered splits
            got = {k: v["frequency"] for k, v in f.items()}
            zs = [abs(v["frequency"] - v["exact"]) / v["se"] for v in f.values()]
            exacts = sorted(v["exact"] for v in f.values())
            return max(zs) <= 3 and np.allclose(exacts, sorted(exact)), f"freqs={got} max|z|={max(zs):.2f}"

        ok, info = with_retry(check, 202)
        ok_all &= ok
        lines.append(info)
    report("02", ok_all, "paintbox n=2 at 10^5 samples: " + " | ".join(lines))


def test_03_gnedin_convergence():
    U = OpenSet.from_pairs([(0.0, 0.2), (0.2, 0.5), (0.5, 1.0)])
    rng = np.random.default_rng(303)
    d = [distance(empirical_open_set(sample_composition(U, 10_000, rng).composition), U) for _ in range(100)]
    med = float(np.median(d))
    report("03", med <= 0.02, f"Gnedin: median d(U_n, U) at n=10^4 over 100 reps = {med:.5f} (<= 0.02)")


def test_04_erosion_closed_form():
    cfg = parse_config({"experiment": "erosion", "seed": 404, "reps": 1,
                        "params": {"c_l": 0.3, "c_r": 0.7, "t": 1.0, "n": 10_000}})
    lf = run_experiment(cfg).summary["left_fraction"]
    target = 0.3 * (1 - math.exp(-1))
    ok = abs(lf["estimate"] - target) <= 0.02
    report("04", ok, f"erosion: left-singleton fraction {lf['estimate']:.4f} vs {target:.4f} (+-0.02)")


def test_05_inhomogeneous_erosion():
    worst = 0.0
    for cl, cr, t in ((0.3, 0.7, 1.0), (1.0, 0.5, 0.4), (0.0, 2.0, 3.0)):
        # constant rates written as several equal pieces reduce to the homogeneous formula
        knots = [0.0, 0.3, 0.8, 1.5]
        a = erosion_state_piecewise(knots, [cl] * 4, [cr] * 4, t)
        b = erosion_state_inhomogeneous(lambda u: cl, lambda u: cr, t, breakpoints=knots)
        h = erosion_state(cl, cr, t)
        for x in (a, b):
            worst = max(worst, abs(x.lefts[0] - h.lefts[0]), abs(x.rights[0] - h.rights[0]))
    knots, cl, cr = [0.0, 0.5, 1.2, 2.0], [0.3, 1.0, 0.0, 0.4], [0.7, 0.2, 0.5, 0.0]
    step = lambda vals: (lambda u: vals[int(np.searchsorted(knots, u, side="right")) - 1])
    for t in (0.25, 0.9, 1.7, 3.0):
        a = erosion_state_inhomogeneous(step(cl), step(cr), t, breakpoints=knots)
        b = erosion_state_piecewise(knots, cl, cr, t)
        worst = max(worst, abs(a.lefts[0] - b.lefts[0]), abs(a.rights[0] - b.rights[0]))
    report("05", worst < 1e-9, f"inhomogeneous erosion: max |quadrature - closed form| = {worst:.2e} (< 1e-9)")


def test_06a_laplace_half_split():
    def check(seed):
        cfg = parse_config({"experiment": "laplace", "seed": seed, "reps": 100_000,
                            "params": {"measure": "half_split", "t": 1.0, "q": [0.5, 1.0, 2.0]}})
        phi = run_experiment(cfg).summary["phi"]
        zs = {q: (v["estimate"] - (1 - 2 ** -float(q))) / v["se"] for q, v in phi.items()}
        est = {q: round(v["estimate"], 5) for q, v in phi.items()}
        return all(abs(z) <= 3 for z in zs.values()), f"estimates={est} z={ {q: round(z, 2) for q, z in zs.items()} }"

    ok, info = with_retry(check, 606)
    report("06a", ok, f"Laplace exponent, half-split, 10^5 paths: {info}")


def test_06b_aldous_pitman_phi_one():
    got = laplace_exponent(FragmentationCharacteristics(aldous_pitman()), 1.0)
    target = math.sqrt(2 * math.pi)
    ok = abs(got - target) <= 1e-6
    report("06b", ok, f"phi_AP(1) by quadrature = {got:.10f}; required sqrt(2 pi) = {target:.10f}; "
                      f"sqrt(pi/2) = {math.sqrt(math.pi / 2):.10f}")


def test_07_time_change():
    p = FragmentationPath(5.0)
    left, _ = p.add_event(1.0, 0, OpenSet.from_pairs([(0, 0.5), (0.5, 1)]), 0.0)
    p.add_event(2.0, left, OpenSet.from_pairs([(0, 0.25), (0.25, 0.5)]), 0.0)
    one = time_change(p, 1.0).event_times().tolist()
    zero = time_change(p, 0.0)
    ok = one == [1.0, 3.0] and zero.event_times().tolist() == [1.0, 2.0] and zero.to_jsonl() == p.to_jsonl()
    report("07", ok, f"time change: alpha=1 -> {one}, alpha=0 identity={zero.to_jsonl() == p.to_jsonl()}")


def test_08_dimension_controls():
    eps = np.geomspace(3.0 ** -7, 3.0 ** -2, 16)
    est = dimension.estimate_dimension(dimension.covering_stats(dimension.cantor_set(8), eps), (eps.min(), eps.max()))
    target = math.log(2) / math.log(3)
    cantor_ok = abs(est.beta_Z - target) <= 0.05
    # covering bound on simulated states of every kind
    rng = np.random.default_rng(808)
    grid = 2.0 ** -np.arange(2, 16)
    states = []
    for _ in range(10):
        e = brownian.sample_excursion(2 ** 14, rng)
        states += [brownian.ap_state(e, t) for t in (0.25, 1.0, 4.0)]
        states.append(dimension.stable_range(rng, 1e-7))
    chars = FragmentationCharacteristics(DiscreteAtoms([(1.0, OpenSet.from_pairs([(0, 0.2), (0.2, 0.7), (0.8, 1)]))]),
                                         0.2, 0.3)
    for _ in range(20):
        path = simulate_homogeneous(chars, 3.0, rng)
        states += [path.state(t) for t in (0.5, 1.5, 3.0)]
    violations = sum(int((~dimension.covering_bound_holds(dimension.covering_stats(U, grid))).sum()) for U in states)
    report("08", cantor_ok and violations == 0,
           f"Cantor depth 8: beta_Z={est.beta_Z:.4f} vs {target:.4f} (+-0.05), beta_N={est.beta_N:.4f}; "
           f"covering bound violations on {len(states)} states = {violations}")


def test_09_brownian_dimension():
    rng = np.random.default_rng(909)
    eps = 2.0 ** -np.arange(6, 15)
    items = [dimension.covering_stats(brownian.ap_state(brownian.sample_excursion(2 ** 20, rng), 1.0), eps)
             for _ in range(20)]
    est = dimension.estimate_dimension(dimension.average_stats(items), (eps.min(), eps.max()))
    ok = abs(est.beta_N - 0.5) <= 0.1 and abs(est.beta_Z - 0.5) <= 0.1 and abs(est.beta_N - est.beta_Z) <= 0.05
    report("09", ok, f"AP grid 2^20, 20 excursions: beta_N={est.beta_N:.4f} (se {est.se_N:.4f}), "
                     f"beta_Z={est.beta_Z:.4f} (se {est.se_Z:.4f})")


def test_10_leftmost_fragment():
    def check(seed):
        rng = np.random.default_rng(seed)
        fine, coarse = brownian.leftmost_lengths(2 ** 20, 1.0, 10_000, rng)
        ks = ks_test(fine, lambda x: brownian.rho_cdf(x, 1.0))
        crit = ks_critical(fine.size, 0.01)
        m_f, se_f = mean_se(fine)
        m_c, _ = mean_se(coarse)
        ok = ks.statistic < crit and abs(m_f - m_c) <= se_f
        return ok, (f"KS D={ks.statistic:.4f} (crit {crit:.4f}, p={ks.p_value:.3f}); mean 2^20={m_f:.4f} "
                    f"vs 2^19={m_c:.4f} (se {se_f:.4f})")

    ok, info = with_retry(check, 1010)
    report("10", ok, f"leftmost fragment t=1, 10^4 excursions: {info}")


def test_11_size_biased_left_block():
    def check(seed):
        rng = np.random.default_rng(seed)
        shares, skipped = brownian.first_split_shares(2 ** 16, 3000, rng, 0.05)
        bins = brownian.first_split_left_bias(shares)
        ok = all(b.n >= 200 and abs(b.z) <= 3 for b in bins)
        return ok, f"skipped={skipped} " + " ".join(f"[{b.lo},{b.hi}):n={b.n},z={b.z:.2f}" for b in bins)

    ok, info = with_retry(check, 1111)
    report("11", ok, f"left-block bias, 3000 excursions at 2^16: {info}")


def test_12_ruelle():
    def check(seed):
        rng = np.random.default_rng(seed)
        t = 0.3
        v = np.array([float(np.sum(ruelle.initial_state(t, 1000, rng).lengths ** 2)) for _ in range(10_000)])
        m, se = mean_se(v)
        crp, crp_se = ruelle.crp_oracle(t, 0.0, 10_000, 200, rng)
        init_ok = abs(m - (1 - t)) <= 3 * se and abs(m - crp) <= 3 * math.hypot(se, crp_se)
        rep = ruelle.semigroup_consistency(0.1, 0.25, 0.4, 1000, 10_000, rng, control=True)
        ok = init_ok and rep.passed and rep.control_rejected
        return ok, (f"E sum s^2 = {m:.4f} (se {se:.4f}) vs 1-t = {1 - t:.4f}, CRP {crp:.4f} (se {crp_se:.4f}); "
                    f"semigroup KS p largest={rep.ks_largest[1]:.3f} sumsq={rep.ks_sumsq[1]:.3f}; "
                    f"control p={min(rep.control_ks_largest[1], rep.control_ks_sumsq[1]):.2e}")

    ok, info = with_retry(check, 1212)
    report("12", ok, f"Ruelle: {info}")


def test_13_uniform_order():
    def check(seed):
        rng = np.random.default_rng(seed)
        s = MassPartition(np.array([0.5, 0.3, 0.2]))
        perms = {p: i for i, p in enumerate(itertools.permutations((0.5, 0.3, 0.2)))}
        counts = np.zeros(6)
        for _ in range(100_000):
            U = uniform_order_lift(s, rng)
            counts[perms[tuple(float(x) for x in np.round(U.lengths, 9))]] += 1
        res = chi_square(counts, np.full(6, 1 / 6))
        return res.p_value > 0.01, f"counts={counts.astype(int).tolist()} p={res.p_value:.3f}"

    ok, info = with_retry(check, 1313)
    report("13", ok, f"uniform order of a 3-mass lift, 10^5 samples: {info}")


def test_14_reproducibility(tmp_path):
    configs = [
        {"experiment": "simulate", "seed": 14, "reps": 40, "params": {"measure": "half_split", "c_l": 0.1, "horizon": 1.5}},
        {"experiment": "paintbox", "seed": 14, "reps": 200},
        {"experiment": "laplace", "seed": 14, "reps": 200, "params": {"measure": "aldous_pitman", "lineage_only": True,
                                                                       "t": 0.5, "delta": 1e-3}},
        {"experiment": "erosion", "seed": 14, "reps": 5, "params": {"n": 500}},
        {"experiment": "timechange", "seed": 14, "reps": 40},
        {"experiment": "brownian", "seed": 14, "reps": 16, "params": {"m": 4096}},
        {"experiment": "ruelle", "seed": 14, "reps": 30, "params": {"sticks": 200}},
        {"experiment": "dimension", "seed": 14, "reps": 4, "params": {"source": "stable"}},
    ]
    mismatched = []
    for raw in configs:
        outputs = set()
        for w in (1, 4, 16):
            cfg = parse_config(dict(raw, workers=w))
            out = run_experiment(cfg).write(tmp_path / f"{raw['experiment']}_{w}")
            outputs.add(((out / "raw.csv").read_bytes(), (out / "report.json").read_bytes()))
        if len(outputs) != 1:
            mismatched.append(raw["experiment"])
    report("14", not mismatched, f"byte-identical report.json/raw.csv across 1/4/16 workers for "
                                 f"{len(configs)} experiments; mismatched={mismatched}")
