import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaoa_cluster.experiment import (
    PRESETS,
    ConfigError,
    ExperimentConfig,
    SolveConfig,
    analyze,
    emit_outputs,
    empirical_cdf,
    gaussian_clusters,
    ks_from_significance,
    ks_significance,
    ks_statistic,
    load_config,
    make_instance,
    random_sampling_cdf,
    read_times_from_traces,
    run_experiment,
    solve_maxcut,
)
from qaoa_cluster.graphs import random_graph, random_weights

SMALL = {
    "graph": {"source": "random", "n": 6, "weight_seeds": [1, 2]},
    "runs": 4,
    "shots": 50,
    "budget": 6,
    "master_seed": 11,
}


def test_solve_trace_shape_and_monotone():
    g = random_weights(random_graph(6, 4), 4)
    inst = make_instance(g, "t")
    res = solve_maxcut(g, SolveConfig(shots=20, budget=8), 3, optimum=inst.optimum)
    hb = [r.historic_best for r in res.records]
    assert hb == sorted(hb)
    assert all(r.best_cost <= r.historic_best for r in res.records)
    assert res.best_cost == hb[-1]
    assert len(res.records) <= 8
    if math.isfinite(res.time_to_optimum):
        assert res.best_cost == pytest.approx(inst.optimum)


def test_solve_is_deterministic():
    g = random_graph(5, 1)
    cfg = SolveConfig(shots=30, budget=5)
    a = solve_maxcut(g, cfg, 9)
    b = solve_maxcut(g, cfg, 9)
    assert [r.gammas for r in a.records] == [r.gammas for r in b.records]
    assert a.best_bitstring == b.best_bitstring


def test_experiment_independent_of_worker_count(tmp_path):
    one = run_experiment(ExperimentConfig.from_dict(dict(SMALL, workers=1)))
    two = run_experiment(ExperimentConfig.from_dict(dict(SMALL, workers=2)))
    emit_outputs(one, tmp_path / "a")
    emit_outputs(two, tmp_path / "b")
    for name in ("traces.csv", "per_step_costs.csv", "ecdf.csv", "null_cdf.csv", "ks_report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_outputs(tmp_path):
    res = run_experiment(ExperimentConfig.from_dict(SMALL))
    paths = emit_outputs(res, tmp_path)
    assert {p.name for p in paths} == {
        "traces.csv", "ecdf.csv", "null_cdf.csv", "ks_report.json", "per_step_costs.csv", "summary.json"
    }
    with open(tmp_path / "traces.csv") as fh:
        rows = list(csv.DictReader(fh))
    by_run = {}
    for row in rows:
        by_run.setdefault(int(row["run"]), []).append(float(row["historic_best"]))
    assert sorted(by_run) == [0, 1, 2, 3]
    for hb in by_run.values():
        assert hb == sorted(hb)
    # per-step cost counts add up to the shot count
    totals = {}
    with open(tmp_path / "per_step_costs.csv") as fh:
        for row in csv.DictReader(fh):
            key = (row["run"], row["step"])
            totals[key] = totals.get(key, 0) + int(row["count"])
    assert set(totals.values()) == {50}
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["runs"] == 4 and len(summary["instances"]) == 2
    times = read_times_from_traces(tmp_path / "traces.csv")
    assert [times[r] for r in range(4)] == res.times_to_optimum()


def test_config_errors_name_fields(tmp_path):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"p": 0, "shots": "many", "graph": {"source": "moon"}, "optimizer": {"kappa": -1}})
    text = "\n".join(info.value.errors)
    for field in ("p:", "shots:", "graph.source:", "optimizer:"):
        assert field in text
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"colour": "blue"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"preset": "nope"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_presets_and_relative_paths(tmp_path):
    for name in PRESETS:
        cfg = ExperimentConfig.from_dict({"preset": name})
        assert cfg.name == name
    (tmp_path / "g.json").write_text(json.dumps({"nodes": 2, "edges": [[0, 1, 1.0]]}))
    (tmp_path / "exp.json").write_text(json.dumps({"graph": {"source": "file", "path": "g.json"}}))
    cfg = load_config(tmp_path / "exp.json")
    assert cfg.graph["path"] == str(tmp_path / "g.json")
    assert ExperimentConfig.from_dict({"noise": "table-s1"}).noise_model(19).readout_vector(19).shape == (19,)


def test_gaussian_clusters_seeded():
    a, la = gaussian_clusters(5, 5.0, 0.5, 3)
    b, _ = gaussian_clusters(5, 5.0, 0.5, 3)
    assert np.array_equal(a, b)
    assert la.tolist() == [0] * 5 + [1] * 5


def test_random_sampling_cdf_edge_cases():
    assert random_sampling_cdf(0.0, 100, 5) == 0.0
    assert random_sampling_cdf(1.0, 100, 0) == 0.0
    assert random_sampling_cdf(1.0, 100, 1) == 1.0
    assert random_sampling_cdf(0.5, 1, 1) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        random_sampling_cdf(1.5, 1, 1)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-9, 0.5), st.floats(1e-9, 0.5), st.integers(1, 5000))
def test_random_sampling_cdf_monotone(p1, p2, shots):
    lo, hi = sorted((p1, p2))
    k = np.arange(0, 60)
    c = random_sampling_cdf(lo, shots, k)
    assert np.all(np.diff(c) >= 0)
    assert np.all(random_sampling_cdf(hi, shots, k) >= c)


def test_ecdf_censoring():
    f = empirical_cdf([1, 3, math.inf, math.inf])
    assert f(0) == 0.0 and f(1) == 0.25 and f(3) == 0.5 and f(1e9) == 0.5


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(0, 30), min_size=1, max_size=20),
    st.lists(st.integers(0, 30), min_size=1, max_size=20),
)
def test_ks_symmetric_and_bounded(a, b):
    fa, fb = empirical_cdf(a), empirical_cdf(b)
    d = ks_statistic(fa, fb)
    assert d == ks_statistic(fb, fa)
    assert 0.0 <= d <= 1.0
    # brute-force sup over a fine grid of points
    xs = np.arange(-1, 32, 0.5)
    assert d == pytest.approx(np.max(np.abs(fa(xs) - fb(xs))))


def test_ks_needs_domain_for_analytic_curves():
    with pytest.raises(ValueError):
        ks_statistic(lambda x: x, empirical_cdf([1]))


def test_ks_significance_known_value():
    # 2 exp(-2 * 0.5^2 * 100 * 100 / 200)
    assert ks_significance(0.5, 100, 100) == pytest.approx(2 * math.exp(-25))
    assert ks_from_significance(ks_significance(0.3, 20, 55), 20, 55) == pytest.approx(0.3, abs=1e-12)


def test_analyze_uses_budget_as_m():
    out = analyze([1, 2, math.inf], 1e-3, 100, 10)
    c = out["comparison"]
    assert (c.n, c.m) == (3, 10)
    assert out["steps"].tolist() == list(range(11))
    assert analyze([], 1e-3, 100, 10)["comparison"] is None
