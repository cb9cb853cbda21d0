import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinlab.errors import (
    BarBetaTooLarge,
    DeltaOutOfRange,
    NegativeArgument,
    NoCriticalPoint,
    NotAntiferromagnetic,
    RootPinned,
    ThetaOutOfRange,
    ZeroSlack,
)
from spinlab.exact_oracle import gibbs, lambda_max_influence, total_influence
from spinlab.graph_core import build_graph, generate, saw_tree
from spinlab.spin_model import Pinning, SpinParams, edge_tilt, flip
from spinlab.tree_analysis import (
    build_control_function,
    control_xi,
    critical_lambda,
    lambda_for_slack,
    saw_si_bound,
    si_ci_formula_bounds,
    ti_recursion,
    tilted_slack_lower_bound,
    tree_from_graph,
    tree_ratio_recursion,
    uniqueness,
    verify_control_function,
    vertex_tilting_quantities,
)

INF = math.inf


def test_tree_ratio_examples():
    assert tree_ratio_recursion(SpinParams(0, 1, 2.5), []) == 2.5
    assert tree_ratio_recursion(SpinParams(0, 1, 1), [INF]) == 0
    assert tree_ratio_recursion(SpinParams(0, 1, 1), [1, 1]) == pytest.approx(0.25)
    assert tree_ratio_recursion(SpinParams(0.5, 2, 1), [0]) == pytest.approx(0.5)
    with pytest.raises(NegativeArgument):
        tree_ratio_recursion(SpinParams(0, 1, 1), [-1])


def test_uniqueness_examples():
    r = uniqueness(SpinParams(0, 1, 4), 2)
    assert r.x_hat == pytest.approx(1, rel=1e-10) and abs(r.slack) < 1e-9 and r.classification == "critical"
    r = uniqueness(SpinParams(1 / 3, 1 / 3, 1), 2)
    assert r.x_hat == pytest.approx(1, rel=1e-10) and abs(r.slack) < 1e-9
    # x (1 + x)^2 = 1 solved independently by a polynomial root finder
    x = max(z.real for z in np.roots([1, 2, 1, -1]) if abs(z.imag) < 1e-12)
    r = uniqueness(SpinParams(0, 1, 1), 2)
    assert r.x_hat == pytest.approx(x, rel=1e-10)
    assert r.slack == pytest.approx(1 - 2 * x / (1 + x), rel=1e-10)
    assert r.x_hat == pytest.approx(0.4656, abs=1e-4) and r.slack == pytest.approx(0.3646, abs=1e-4)
    assert r.classification == "unique_with_slack"
    assert uniqueness(SpinParams(0, 1, 10), 2).classification == "non_unique"
    with pytest.raises(NotAntiferromagnetic):
        uniqueness(SpinParams(1, 1, 1), 2)


@given(st.floats(0, 0.9), st.floats(0.1, 2), st.floats(0.01, 20), st.integers(1, 6))
def test_fixed_point_property(b, g, lam, d):
    if b * g >= 0.95:
        return
    r = uniqueness(SpinParams(b, g, lam), d)
    f = lam * ((b * r.x_hat + 1) / (r.x_hat + g)) ** d
    assert f == pytest.approx(r.x_hat, rel=1e-10)
    assert r.slack <= 1


@given(st.floats(0.05, 0.9), st.floats(0.1, 2), st.floats(0.01, 20), st.integers(1, 6))
def test_flip_preserves_slack(b, g, lam, d):
    if b * g >= 0.95:
        return
    p = SpinParams(b, g, lam)
    assert uniqueness(flip(p), d).slack == pytest.approx(uniqueness(p, d).slack, abs=1e-8)


def test_critical_lambda_examples():
    assert critical_lambda(0, 1, 2) == pytest.approx((4, 1))
    lam, x = critical_lambda(1 / 3, 1 / 3, 2)
    assert lam == pytest.approx(1, rel=1e-9) and x == pytest.approx(1, rel=1e-6)
    with pytest.raises(NoCriticalPoint):
        critical_lambda(0.5, 1, 2)


@given(st.floats(0, 0.3), st.floats(0.1, 2), st.integers(2, 6))
def test_critical_round_trip(b, g, d):
    if math.sqrt(b * g) >= (d - 1) / (d + 1) - 1e-3:
        return
    lam, _ = critical_lambda(b, g, d)
    assert abs(uniqueness(SpinParams(b, g, lam), d).slack) < 1e-9


@pytest.mark.parametrize("slack", [0.1, 0.5, 0.9])
def test_lambda_for_slack(slack):
    lam = lambda_for_slack(0, 1, 2, slack)
    assert uniqueness(SpinParams(0, 1, lam), 2).slack == pytest.approx(slack, abs=1e-9)
    with pytest.raises(DeltaOutOfRange):
        lambda_for_slack(0, 1, 2, 1.5)


def test_tilted_slack_examples():
    crit = SpinParams(1 / 3, 1 / 3, 1)
    assert tilted_slack_lower_bound(crit, 2, 1) == 0
    assert tilted_slack_lower_bound(crit, 2, 2) == pytest.approx(0.5)
    assert uniqueness(edge_tilt(crit, 2), 2).slack >= 0.5
    assert tilted_slack_lower_bound(crit, 2, 3) == pytest.approx(1)
    # at the product point itself the model is not antiferromagnetic; approach it
    assert uniqueness(edge_tilt(crit, 3 * (1 - 1e-9)), 2).slack == pytest.approx(1, abs=1e-6)
    with pytest.raises(ThetaOutOfRange):
        tilted_slack_lower_bound(crit, 2, 3.5)


def test_tilted_slack_grid():
    # 20 parameter points x 20 tilts, each critical at its branching number
    worst = INF
    for b in np.linspace(0.0, 0.08, 5):
        for g in (0.3, 0.6, 0.9, 1.2):
            lam, _ = critical_lambda(b, g, 2)
            p = SpinParams(b, g, lam)
            top = (1 - 1e-9) / math.sqrt(b * g) if b > 0 else 50.0
            for th in np.linspace(1, top, 20):
                bound = tilted_slack_lower_bound(p, 2, th)
                worst = min(worst, uniqueness(edge_tilt(p, th), 2).slack - bound)
    assert worst >= -1e-9


# control function -------------------------------------------------------

def test_control_function_branches():
    cf = build_control_function(SpinParams(0, 1, 1), 3)
    assert control_xi(cf, 0) == pytest.approx(1 / cf.delta)
    assert control_xi(cf, cf.x_hat * 0.5) == pytest.approx(1 / cf.delta)
    assert control_xi(cf, cf.top * 2) == 0
    right = control_xi(cf, cf.x_hat * (1 + 1e-12))
    assert right == pytest.approx(1 / cf.delta, abs=1e-9)
    assert 1 + cf.D / cf.delta * float(cf.psi(cf.x_hat)) == pytest.approx(1 / cf.delta, rel=1e-9)
    with pytest.raises(NegativeArgument):
        control_xi(cf, -1)
    with pytest.raises(ZeroSlack):
        build_control_function(SpinParams(0, 1, 4), 3)


def test_control_function_verifies():
    cf = build_control_function(SpinParams(0, 1, 1), 3)
    rep = verify_control_function(cf, trials=20000, seed=3)
    assert rep.passed
    assert rep.max_xi_psi == pytest.approx(rep.product_bound, abs=1e-6)


def test_control_function_auto_flip():
    p = SpinParams(0.2, 0.5, 100.0)
    assert p.lam > (p.gamma / p.beta) ** 1.5
    cf = build_control_function(p, 3)
    assert cf.flipped
    assert verify_control_function(cf, trials=5000, seed=0).passed


# total influence on trees -----------------------------------------------

def test_ti_examples():
    hc = SpinParams(0, 1, 1)
    leaf = tree_from_graph(build_graph(1, []), 0)
    assert ti_recursion(leaf, hc) == (1.0, 1.0)
    path = tree_from_graph(generate("path", 2), 0)
    assert ti_recursion(path, hc)[0] == pytest.approx(1.5)
    assert ti_recursion(path, hc)[0] == pytest.approx(total_influence(gibbs(generate("path", 2), hc), 0))
    ti, R = ti_recursion(tree_from_graph(generate("path", 2), 0, {1: 1}), hc)
    assert ti == 1 and R == 0
    with pytest.raises(RootPinned):
        ti_recursion(tree_from_graph(generate("path", 2), 0, {0: 1}), hc)


def _nx_tree(n, seed):
    rng = np.random.default_rng(seed)
    t = nx.from_prufer_sequence(list(rng.integers(0, n, size=n - 2))) if n > 2 else nx.path_graph(n)
    return build_graph(n, list(t.edges()))


@settings(max_examples=40)
@given(st.integers(1, 9), st.integers(0, 10**6), st.floats(0, 0.8), st.floats(0.2, 2), st.floats(0.1, 5))
def test_ti_matches_enumeration_on_trees(n, seed, b, g, lam):
    if b * g >= 1:
        return
    t = _nx_tree(n, seed)
    p = SpinParams(b, g, lam)
    d = gibbs(t, p)
    root = seed % n
    ti, R = ti_recursion(tree_from_graph(t, root), p)
    assert ti == pytest.approx(total_influence(d, root), rel=1e-10)
    m = d.marginals()[root]
    assert R == pytest.approx(m / (1 - m), rel=1e-10)


@pytest.mark.parametrize("g", [generate("cycle", 4), generate("cycle", 5), generate("complete", 4),
                               generate("prism", 3), generate("complete_bipartite", 2, 3)])
@pytest.mark.parametrize("p", [SpinParams(0, 1, 1), SpinParams(0.2, 0.8, 1.5), SpinParams(0.5, 1.2, 0.4)])
def test_saw_bound_dominates(g, p):
    d = gibbs(g, p)
    bound = saw_si_bound(g, p)
    assert bound >= max(total_influence(d, r) - 1 for r in range(g.n)) - 1e-10
    assert bound >= lambda_max_influence(d) - 1e-10


def test_saw_bound_on_tree_and_guard():
    t = generate("balanced_tree", 2, 2)
    p = SpinParams(0, 1, 1)
    assert saw_si_bound(t, p) == pytest.approx(max(ti_recursion(saw_tree(t, r), p)[0] for r in range(t.n)) - 1)
    with pytest.raises(NotAntiferromagnetic):
        saw_si_bound(t, SpinParams(1, 1, 1))


def test_saw_bound_with_pinning():
    g = generate("cycle", 5)
    p = SpinParams(0, 1, 1.2)
    pin = Pinning({0: 1})
    d = gibbs(g, p, pin)
    assert saw_si_bound(g, p, pin) >= max(total_influence(d, r) - 1 for r in range(1, 5)) - 1e-10


# formula bounds ------------------------------------------------------------

def test_si_ci_formula():
    assert si_ci_formula_bounds(0.5, 3) == pytest.approx((1.5, 2.5))
    assert si_ci_formula_bounds(1, 3) == (0, 1)
    with pytest.raises(DeltaOutOfRange):
        si_ci_formula_bounds(1e-13, 3)


GRAPHS = [generate("cycle", 4), generate("cycle", 6), generate("complete", 4), generate("prism", 3),
          generate("complete_bipartite", 3, 3), generate("path", 5), generate("star", 5)]


@pytest.mark.parametrize("g", GRAPHS)
def test_si_formula_dominates_enumeration(g):
    Delta = g.max_degree
    rng = np.random.default_rng(g.n)
    for b, gm in [(0, 1), (0.2, 0.8), (0.1, 1.5), (0.4, 0.4)]:
        if gm > 1 and not g.is_regular():
            continue
        for lam in (0.3, 1.0, 2.5):
            p = SpinParams(b, gm, lam)
            delta = uniqueness(p, max(Delta - 1, 1)).slack
            if delta <= 1e-9:
                continue
            si, _ = si_ci_formula_bounds(delta, max(Delta, 2))
            for _ in range(3):
                vs = rng.choice(g.n, size=rng.integers(0, 3), replace=False)
                pin = Pinning({int(v): int(rng.integers(0, 2)) for v in vs})
                try:
                    d = gibbs(g, p, pin)
                except Exception:
                    continue
                assert lambda_max_influence(d) <= si + 1e-9


def test_vertex_tilting_examples():
    r = vertex_tilting_quantities(0.2, 0.2, 3, 0.2)
    assert r.chain_holds
    assert r.middle_closed == pytest.approx(r.kappa)
    assert r.lambda_of_x(r.x_c) == pytest.approx(r.lambda_c)
    assert abs(r.delta_of_x(r.x_c)) < 1e-9
    assert r.middle_at_xc == pytest.approx(r.middle_closed, rel=1e-8)
    with pytest.raises(BarBetaTooLarge):
        vertex_tilting_quantities(0.1, 0.1, 3, 0.31)
