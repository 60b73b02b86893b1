import json
import logging

import numpy as np
import pytest
from scipy import stats as sps

from fragkit.cli import main
from fragkit.config import ConfigError, load_config, parse_config
from fragkit.experiments import left_singletons, run_experiment
from fragkit.compositions import Composition
from fragkit.stats import (chi_square, chi_square_two_sample, ks_critical, ks_test, log_moment, pool_cells,
                           retry_on_new_seed)
from fragkit.streams import replicate_map, stream


def test_ks_null_rarely_rejects(rng):
    p = [ks_test(rng.random(500), sps.uniform.cdf).p_value for _ in range(100)]
    assert sum(v > 0.01 for v in p) >= 96


def test_ks_power_against_shift(rng):
    r = ks_test(rng.random(10_000) + 0.05, sps.uniform.cdf)
    assert r.p_value < 0.01
    assert r.statistic > ks_critical(10_000)


def test_ks_needs_ten_samples():
    with pytest.raises(ValueError):
        ks_test([0.1] * 5, sps.uniform.cdf)


def test_chi_square_fair_die(rng):
    counts = np.bincount(rng.integers(0, 6, 6000), minlength=6)
    r = chi_square(counts, np.full(6, 1 / 6))
    assert r.dof == 5 and r.p_value > 0.001
    loaded = np.bincount(rng.choice(6, 6000, p=[0.25, 0.15, 0.15, 0.15, 0.15, 0.15]), minlength=6)
    assert chi_square(loaded, np.full(6, 1 / 6)).p_value < 0.01


def test_pooling_merges_small_cells():
    o, e = pool_cells([10, 20, 1, 2, 1], [10.0, 20.0, 1.0, 2.0, 1.5])
    # the pooled cell (4.5) is still below 5, so the next smallest joins it
    assert o.tolist() == [20, 14] and e.tolist() == [20.0, 14.5]
    o, e = pool_cells([10, 20, 30], [10.0, 20.0, 30.0])
    assert o.tolist() == [10, 20, 30]


def test_two_sample_chi_square(rng):
    a = np.bincount(rng.integers(0, 4, 4000), minlength=4)
    b = np.bincount(rng.integers(0, 4, 4000), minlength=4)
    assert chi_square_two_sample(a, b).p_value > 0.001


def test_log_moment_delta_method():
    est, se = log_moment(np.full(100, 0.5), 1.0)
    assert est == pytest.approx(np.log(2)) and se == 0.0


def test_retry_logs_both_seeds(caplog):
    calls = []

    def check(seed):
        calls.append(seed)
        return seed != 7, seed

    with caplog.at_level(logging.INFO, logger="fragkit.stats"):
        ok, _, seeds = retry_on_new_seed(check, 7)
    assert ok and seeds == [7, 7 + 1_000_003] and calls == seeds
    assert "7" in caplog.text and str(7 + 1_000_003) in caplog.text


def test_streams_deterministic_and_distinct():
    a = stream(1, "x", 3).random(5)
    assert np.array_equal(a, stream(1, "x", 3).random(5))
    assert not np.array_equal(a, stream(1, "x", 4).random(5))
    assert not np.array_equal(a, stream(1, "y", 3).random(5))
    assert not np.array_equal(a, stream(2, "x", 3).random(5))
    with pytest.raises(ValueError):
        stream(-1, "x", 0)


def test_replicate_map_order_independent_of_workers():
    fn = lambda r, g: (r, float(g.random()))
    one = replicate_map(fn, 40, 9, "t", 1)
    assert replicate_map(fn, 40, 9, "t", 4) == one == replicate_map(fn, 40, 9, "t", 16)


def test_config_errors_carry_path(tmp_path):
    with pytest.raises(ConfigError) as e:
        parse_config({"experiment": "simulate", "params": {"horizon": -1}})
    assert e.value.path == "params.horizon"
    with pytest.raises(ConfigError) as e:
        parse_config({"experiment": "simulate", "params": {"bogus": 1}})
    assert e.value.path == "params.bogus"
    with pytest.raises(ConfigError) as e:
        parse_config({"experiment": "nope"})
    assert e.value.path == "experiment"
    with pytest.raises(ConfigError) as e:
        parse_config({"experiment": "ruelle", "params": {"times": [0.5, 0.2]}})
    assert e.value.path == "params.times"
    with pytest.raises(ConfigError) as e:
        parse_config({"experiment": "simulate", "params": {"measure": "unknown_measure"}})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_left_singletons():
    g = Composition(5, ((2,), (4,), (1, 3), (5,)))
    assert left_singletons(g) == 2


def test_laplace_experiment_half_split():
    cfg = parse_config({"experiment": "laplace", "seed": 3, "reps": 4000, "params": {"q": [1.0]}})
    phi = run_experiment(cfg).summary["phi"]["1.0"]
    assert abs(phi["estimate"] - 0.5) < 3 * phi["se"] or abs(phi["z"]) < 4


def test_paintbox_experiment():
    cfg = parse_config({"experiment": "paintbox", "seed": 1, "reps": 20_000})
    s = run_experiment(cfg).summary
    for f in s["frequencies"].values():
        assert abs(f["frequency"] - f["exact"]) < 4 * f["se"]
    assert not s["unexpected"]


@pytest.mark.parametrize("name", ["simulate", "paintbox", "laplace", "erosion", "timechange", "ruelle"])
def test_cli_writes_reports(name, tmp_path):
    extra = ["--sticks", "100"] if name == "ruelle" else []
    assert main([name, "--seed", "2", "--reps", "20", "--out", str(tmp_path)] + extra) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["experiment"] == name
    assert (tmp_path / "raw.csv").read_text().count("\n") == 21


def test_cli_brownian_and_dimension(tmp_path, capsys):
    assert main(["brownian", "--seed", "1", "--reps", "12", "--config", _write(tmp_path, {
        "experiment": "brownian", "params": {"m": 1024}})]) == 0
    assert json.loads(capsys.readouterr().out)["leftmost"]["se"] > 0
    assert main(["dimension", "--reps", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["covering_bound_ok"] and abs(out["dimension"]["beta_Z"] - np.log(2) / np.log(3)) < 0.05


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = _write(tmp_path, {"experiment": "simulate", "params": {"delta": 2.0}})
    assert main(["simulate", "--config", path]) == 2
    assert "params.delta" in capsys.readouterr().err


def test_outputs_byte_identical_across_workers(tmp_path):
    texts = set()
    for w in (1, 4, 16):
        cfg = parse_config({"experiment": "simulate", "seed": 5, "reps": 30, "workers": w,
                            "params": {"measure": "half_split", "c_l": 0.1, "horizon": 1.5}})
        r = run_experiment(cfg)
        texts.add((r.csv_text(), r.json_text()))
    assert len(texts) == 1


def _write(tmp_path, raw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return str(p)
