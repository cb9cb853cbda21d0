import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from spinlab.errors import InconsistentPinning, InvalidParams, NonPositiveTilt, ZeroField
from spinlab.exact_oracle import covariance, gibbs
from spinlab.graph_core import generate
from spinlab.spin_model import (
    EventFamily,
    Pinning,
    RandomClusterParams,
    SpinParams,
    config_bits,
    edge_counts,
    edge_tilt,
    events_occurring,
    flip,
    log_weight,
    log_weights,
    rc_weight_log,
    vertex_tilt,
)

K2 = generate("complete", 2)
C4 = generate("cycle", 4)
pos = st.floats(0.05, 5.0)


def test_params_validation_and_flags():
    with pytest.raises(InvalidParams):
        SpinParams(1, 0, 1)
    with pytest.raises(InvalidParams):
        SpinParams(-1, 1, 1)
    with pytest.raises(InvalidParams):
        SpinParams(1, 1, float("nan"))
    p = SpinParams(0, 1, 2)
    assert p.antiferromagnetic and p.hard_constraint and not p.ferromagnetic
    assert SpinParams(2, 2, 1).ferromagnetic


def test_params_json():
    p = SpinParams(0.5, 2, 0.7)
    assert SpinParams.from_json(p.to_json()) == p
    with pytest.raises(InvalidParams):
        SpinParams.from_json({"beta": 1, "gamma": 1, "lambda": 1, "mu": 2})


def test_log_weight_examples():
    assert log_weight(SpinParams(2, 2, 1), K2, [1, 1]) == pytest.approx(math.log(2))
    assert log_weight(SpinParams(1, 1, 1), C4, [1, 0, 1, 1]) == 0.0
    assert log_weight(SpinParams(0, 1, 2), K2, [1, 1]) == -math.inf


def test_log_weight_respects_pinning():
    pin = Pinning({0: 1})
    assert log_weight(SpinParams(1, 1, 1), K2, [0, 1], pin) == -math.inf
    pin = Pinning(mono_edges={(0, 1)})
    assert log_weight(SpinParams(1, 1, 1), K2, [0, 1], pin) == -math.inf
    pin = Pinning(oriented_events={(1, 0)})
    assert pin.vertex_constraints() == {1: 1, 0: 0}
    with pytest.raises(InconsistentPinning):
        Pinning({1: 0}, oriented_events={(1, 0)})


def test_tilt_examples():
    assert edge_tilt(SpinParams(2, 2, 1), 1) == SpinParams(2, 2, 1)
    assert edge_tilt(SpinParams(2, 2, 1), 0.5) == SpinParams(1, 1, 1)
    assert vertex_tilt(SpinParams(0, 1, 4), 0.25) == SpinParams(0, 1, 1)
    with pytest.raises(NonPositiveTilt):
        edge_tilt(SpinParams(1, 1, 1), 0)


def test_edge_tilt_to_product_point_decorrelates():
    p = SpinParams(0.3, 0.6, 1.4)
    q = edge_tilt(p, 1 / math.sqrt(p.beta * p.gamma))
    cov = covariance(gibbs(C4, q))
    assert np.abs(cov - np.diag(np.diag(cov))).max() < 1e-12


def test_vertex_tilt_weight_identity():
    p = SpinParams(0, 1, 4)
    bits = config_bits(np.arange(16), 4)
    a, b = log_weights(vertex_tilt(p, 0.3), C4, bits), log_weights(p, C4, bits)
    ok = np.isfinite(b)
    diff = np.where(ok, a - np.where(ok, b, 0), 0)
    assert np.allclose(diff[ok], bits.sum(axis=1)[ok] * math.log(0.3), atol=1e-12)


def test_flip_examples():
    assert flip(SpinParams(2, 3, 0.5)) == SpinParams(3, 2, 2)
    with pytest.raises(ZeroField):
        flip(SpinParams(1, 1, 0))
    p = SpinParams(0.5, 2, 0.7)
    mu, nu = gibbs(K2, p).probs, gibbs(K2, flip(p)).probs
    assert np.allclose(nu, mu[::-1], atol=1e-14)


@given(pos, pos, pos)
def test_flip_involution(b, g, lam):
    p = SpinParams(b, g, lam)
    q = flip(flip(p))
    assert q.beta == p.beta and q.gamma == p.gamma and q.lam == pytest.approx(p.lam, rel=1e-15)


@given(pos, pos, pos, st.floats(0.1, 3), st.floats(0.1, 3))
def test_tilts_compose(b, g, lam, a, c):
    p = SpinParams(b, g, lam)
    e1, e2 = edge_tilt(edge_tilt(p, a), c), edge_tilt(p, a * c)
    assert e1.beta == pytest.approx(e2.beta) and e1.gamma == pytest.approx(e2.gamma)
    assert vertex_tilt(vertex_tilt(p, a), c).lam == pytest.approx(vertex_tilt(p, a * c).lam)


@given(st.integers(1, 6), st.floats(0, 3), pos, pos, st.floats(0.1, 3), st.integers(0, 10**6))
def test_tilt_weight_identities(n, b, g, lam, theta, seed):
    graph = generate("random_regular", n, 0, seed) if n < 3 else generate("cycle", n)
    bits = config_bits(np.arange(1 << n), n)
    p = SpinParams(b, g, lam)
    base = log_weights(p, graph, bits)
    m1, m0 = edge_counts(graph, bits)
    et = log_weights(edge_tilt(p, theta), graph, bits)
    vt = log_weights(vertex_tilt(p, theta), graph, bits)
    ok = np.isfinite(base)
    assert np.allclose(et[ok] - base[ok], (m1 + m0)[ok] * math.log(theta), atol=1e-12)
    assert np.allclose(vt[ok] - base[ok], bits.sum(axis=1)[ok] * math.log(theta), atol=1e-12)
    assert np.array_equal(np.isfinite(et), ok) and np.array_equal(np.isfinite(vt), ok)


@given(st.integers(0, 15), st.integers(0, 15), st.integers(0, 3))
def test_pinning_feasibility_matches_enumeration(assign_mask, val_mask, mono_idx):
    assign = {v: val_mask >> v & 1 for v in range(4) if assign_mask >> v & 1}
    mono = [C4.edges[mono_idx]]
    p = SpinParams(0.5, 1.5, 0.8)
    ref = oracles.gibbs(4, C4.edges, 0.5, 1.5, 0.8, assign, mono)
    bits = config_bits(np.arange(16), 4)
    lw = log_weights(p, C4, bits, Pinning(assign, frozenset(mono)))
    assert np.array_equal(np.isfinite(lw), ref > 0)


def test_presets_count_events():
    g = generate("prism", 3)
    assert len(EventFamily.preset("vertex_occupied", g).events) == g.n
    assert len(EventFamily.preset("oriented_edge_10", g).events) == 2 * g.num_edges
    assert len(EventFamily.preset("edge_monochromatic", g).events) == g.num_edges


def test_events_occurring_examples():
    assert events_occurring(EventFamily.preset("vertex_occupied", C4), [0, 0, 0, 0]) == set()
    assert events_occurring(EventFamily.preset("edge_monochromatic", K2), [1, 1]) == {(0, 1)}
    assert events_occurring(EventFamily.preset("oriented_edge_10", K2), [1, 0]) == {(0, 1)}


def test_rc_weight_examples():
    assert rc_weight_log(RandomClusterParams(0.5, 1), K2, []) == pytest.approx(math.log(0.5) + 2 * math.log(2))
    assert rc_weight_log(RandomClusterParams(0, 0.3), C4, []) == pytest.approx(4 * math.log(1.3) + 0.0)
    assert rc_weight_log(RandomClusterParams(0.4, 0), C4, C4.edges[:2]) == pytest.approx(
        2 * math.log(0.4) + 2 * math.log(0.6))
    assert RandomClusterParams.from_ising(2, 0.5).p == 0.5
