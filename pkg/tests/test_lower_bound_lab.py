import json
import math

import pytest
from hypothesis import given, strategies as st

from spinlab.errors import NotBipartiteRegular, TooLarge
from spinlab.graph_core import generate
from spinlab.lower_bound_lab import run_lower_bound_experiment, si_ceiling, truncated_lower_sum

K33 = generate("complete_bipartite", 3, 3)


def test_truncated_sum_examples():
    assert truncated_lower_sum(0.3, 3, 1) == pytest.approx(3 * 0.7 / 2)
    assert truncated_lower_sum(1.0, 4, 7) == 0
    assert truncated_lower_sum(0.5, 3, 400) == pytest.approx(si_ceiling(0.5, 3), rel=1e-12)


@given(st.floats(0.01, 1.0), st.integers(3, 8), st.integers(1, 30))
def test_truncated_sum_below_ceiling(delta, Delta, r):
    s = truncated_lower_sum(delta, Delta, r)
    assert 0 <= s <= si_ceiling(delta, Delta) + 1e-12
    assert truncated_lower_sum(delta, Delta, r + 1) >= s


def test_k33_sandwich():
    run = run_lower_bound_experiment(K33, 0.5, graph_id="K33")
    assert run.r == 1 and run.Delta == 3
    assert run.slack == pytest.approx(0.5, abs=1e-9)
    assert run.sandwich_holds and run.rayleigh_holds
    json.dumps(run.to_json())
    assert run.to_csv().splitlines()[0] == "graph_id,distance,pairs,mean_abs,min_abs,max_abs,predicted"


@pytest.fixture(scope="module")
def heawood_runs():
    g = generate("heawood")
    return {d: run_lower_bound_experiment(g, d, graph_id="heawood") for d in (0.5, 0.9)}


def test_heawood_sandwich(heawood_runs):
    run = heawood_runs[0.5]
    assert run.girth == 6 and run.r == 2
    assert run.truncated_sum <= run.lambda_max_measured + 1e-6 <= run.ceiling + 2e-6
    assert run.rayleigh_holds
    row = run.row(1)
    assert row["pairs"] == 42
    assert abs(row["mean_abs"] - 0.25) <= 0.1 * 0.25


def test_gap_to_ceiling_shrinks_with_girth(heawood_runs):
    small = run_lower_bound_experiment(K33, 0.9)
    big = heawood_runs[0.9]
    assert big.ceiling - big.lambda_max_measured < small.ceiling - small.lambda_max_measured


def test_antiferromagnetic_soft_instance():
    run = run_lower_bound_experiment(K33, 0.4, beta=0.1, gamma=0.8)
    assert run.sandwich_holds and run.rayleigh_holds


def test_guards():
    with pytest.raises(NotBipartiteRegular):
        run_lower_bound_experiment(generate("complete", 4), 0.5)
    with pytest.raises(NotBipartiteRegular):
        run_lower_bound_experiment(generate("cycle", 6), 0.5)
    with pytest.raises(TooLarge):
        run_lower_bound_experiment(generate("complete_bipartite", 10, 10), 0.5)
