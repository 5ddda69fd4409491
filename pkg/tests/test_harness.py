import csv
import io
import json
import math

import pytest

from exsel import harness
from exsel import simcore as sc


def test_adaptive_grid_rows_and_summary(tmp_path):
    cfg = harness.ExperimentConfig("adaptive", ks=[1, 2, 4, 8], repetitions=100)
    res = harness.run_experiment(cfg, out=tmp_path)
    assert res.clean and len(res.rows) == 400
    rows = list(csv.DictReader(io.StringIO((tmp_path / "results.csv").read_text())))
    assert len(rows) == 400 and tuple(rows[0]) == harness.CSV_FIELDS
    assert all(r["violations"] == "0" for r in rows)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["rows"] == 400 and summary["violations"] == []
    assert [p["k"] for p in summary["report"]["points"]] == [1, 2, 4, 8]
    for p in res.report.points:
        assert p.max_name <= p.range_bound


def test_outputs_byte_identical(tmp_path):
    cfg = harness.ExperimentConfig("snapshot", ks=[2, 3], Ns=[64], repetitions=10)
    harness.run_experiment(cfg, out=tmp_path / "a")
    harness.run_experiment(cfg, out=tmp_path / "b")
    for name in ("results.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_exhaustive_compete_summary(tmp_path):
    cfg = harness.ExperimentConfig("compete", ks=[2], Ns=[4], mode="exhaustive", bound=6, crash_budget=1)
    res = harness.run_experiment(cfg, out=tmp_path)
    assert res.clean and res.rows == []
    assert res.exhaustive == [{"k": 2, "N": 4, "bound": 6, "crash_budget": 1,
                               "traces": 1712, "states": 364, "violations": 0}]
    assert not (tmp_path / "results.csv").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["exhaustive"][0]["traces"] == 1712


def test_crash_script_prefix():
    cfg = harness.ExperimentConfig("ma", ks=[3], Ns=[8], repetitions=5, crash_script="A 1\nX 1\n")
    res = harness.run_experiment(cfg)
    assert res.clean


def test_round_robin_scheduler():
    cfg = harness.ExperimentConfig("efficient", ks=[4], Ns=[64], repetitions=2, scheduler="round_robin")
    res = harness.run_experiment(cfg)
    assert res.clean and res.rows[0]["max_steps"] == res.rows[1]["max_steps"]


@pytest.mark.parametrize("kw", [
    dict(algo="bogus"), dict(algo="ma", scheduler="fifo"), dict(algo="ma", mode="smart"),
    dict(algo="ma", ks=[]), dict(algo="ma", ks=[0]), dict(algo="ma", ks=[8], Ns=[4]),
    dict(algo="ma", profile="huge"), dict(algo="ma", repetitions=0),
    dict(algo="ma", crash_script="Z 1"),
])
def test_config_validation(kw):
    with pytest.raises(sc.ConfigurationError):
        harness.ExperimentConfig(**kw)


def test_from_json():
    cfg = harness.ExperimentConfig.from_json('{"algo": "ma", "ks": [2], "repetitions": 3}')
    assert cfg.seeds == [0, 1, 2]
    with pytest.raises(sc.ConfigurationError):
        harness.ExperimentConfig.from_json('{"algo": "ma", "colour": 1}')
    with pytest.raises(sc.ConfigurationError):
        harness.ExperimentConfig.from_json("[1]")


def test_crashes_for():
    assert harness.ExperimentConfig("ma").crashes_for(4) == 3
    assert harness.ExperimentConfig("ma", crashes=1).crashes_for(4) == 1
    assert harness.ExperimentConfig("ma", crashes=5).crashes_for(2) == 1


def test_step_formulas():
    assert harness.step_formula("compete", 8, 2**16) == 1
    assert harness.step_formula("majority", 8, 2**16) == 16
    assert harness.step_formula("basic", 8, 2**16) == 3 * 16
    assert harness.step_formula("polylog", 8, 2**16) == 3 * (16 + 3 * 4)
    assert harness.step_formula("ma", 8, 2**16) == 8
    with pytest.raises(sc.ConfigurationError):
        harness.step_formula("nope", 1, 1)


def test_lower_bound_formula():
    assert harness.lower_bound(8, 2**16, 15, 4) == pytest.approx(1 + min(6, math.log(2**16 / 30, 8)))
    assert harness.lower_bound(3, 2**40, 5, 10) == 2
    assert harness.lower_bound(1, 8, 1, 0) == 0  # k - 2 < 0 is reported raw


def test_fitted_constant_is_max_ratio():
    cfg = harness.ExperimentConfig("ma", ks=[2, 4], Ns=[16], repetitions=20)
    res = harness.run_experiment(cfg)
    ratios = [p.max_steps / p.k for p in res.report.points]
    assert res.report.fitted_c == max(ratios)
    assert harness.fitted_constant("ma", [2, 4], [16], range(20)) == max(ratios)


def test_exclusive_property():
    def mk(decisions):
        return sc.FinalState(decisions, {}, frozenset(), frozenset(), None)

    assert harness.exclusive_property(mk({1: (("name", 1),), 2: (("name", 2),)}))
    assert not harness.exclusive_property(mk({1: (("name", 1),), 2: (("name", 1),)}))
    assert not harness.exclusive_property(mk({1: (("win", 1),), 2: (("win", 1),)}))
