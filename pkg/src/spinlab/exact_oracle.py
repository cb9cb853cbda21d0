"""Brute-force ground truth for small instances.

Everything here works on dense tables indexed by bitmask. Distributions,
correlation matrices, transition matrices of every chain, spectral data,
mixing times and tensorization constants are computed exactly.
"""
from __future__ import annotations

import builtins
import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    EmptySupport,
    InvalidTilt,
    NotAbsolutelyContinuous,
    Nonconvergent,
    NotFerromagnetic,
    NotReversible,
    TooLarge,
    ZeroGap,
)
from .graph_core import Graph, UnionFind
from .spin_model import (
    EventFamily,
    Pinning,
    RandomClusterParams,
    SpinParams,
    SpinSystem,
    config_bits,
    edge_tilt,
    log_weights,
    rc_weight_log,
    vertex_tilt,
)

MAX_VERTICES = 20
MAX_SUPPORT = 4096
MAX_SW_EDGES = 20
MAX_EVENTS = 22
MIXING_CAP = 10**6


@dataclass(frozen=True)
class DistTable:
    """Distribution over ``{0,1}^n`` stored as a dense vector indexed by bitmask."""

    n: int
    probs: np.ndarray = field(repr=False)
    log_z: float = 0.0
    domain_kind: str = "vertices"
    labels: tuple | None = None

    @cached_property
    def bits(self) -> np.ndarray:
        return config_bits(np.arange(1 << self.n), self.n)

    @cached_property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @property
    def min_prob(self) -> float:
        return float(self.probs[self.support].min())

    def marginals(self) -> np.ndarray:
        return self.bits.T.astype(float) @ self.probs

    def conditioned(self, mask: np.ndarray) -> "DistTable":
        """Restriction to the configurations where ``mask`` is true."""
        p = np.where(mask, self.probs, 0.0)
        s = p.sum()
        if s <= 0:
            raise EmptySupport("conditioning on a null event")
        return DistTable(self.n, p / s, self.log_z + math.log(s), self.domain_kind, self.labels)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "domain_kind": self.domain_kind,
            "labels": [list(x) if isinstance(x, tuple) else x for x in (self.labels or range(self.n))],
            "log_z": self.log_z,
            "probs": {int(i): float(self.probs[i]) for i in self.support},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["bitmask", "prob"])
        for i in self.support:
            w.writerow([f"{int(i):x}", repr(float(self.probs[i]))])
        return buf.getvalue()


def _from_log_weights(n: int, lw: np.ndarray, kind: str = "vertices", labels=None) -> DistTable:
    if not np.any(np.isfinite(lw)):
        raise EmptySupport("no configuration has positive weight")
    log_z = float(logsumexp(lw))
    return DistTable(n, np.exp(lw - log_z), log_z, kind, labels)


def enumerate(system: SpinSystem, max_vertices: int = MAX_VERTICES) -> DistTable:  # noqa: A001
    """Exact Gibbs distribution of ``system``."""
    g = system.graph
    if g.n > max_vertices:
        raise TooLarge(f"{g.n} vertices exceeds the enumeration cap {max_vertices}")
    bits = config_bits(np.arange(1 << g.n), g.n)
    return _from_log_weights(g.n, log_weights(system.params, g, bits, system.pinning))


def gibbs(g: Graph, params: SpinParams, pinning: Pinning | None = None) -> DistTable:
    return enumerate(SpinSystem(g, params, pinning or Pinning()))


def enumerate_random_cluster(rc: RandomClusterParams, g: Graph, forced: Iterable = ()) -> DistTable:
    """Random-cluster law over edge subsets (bit ``i`` is edge ``g.edges[i]``), conditioned on ``forced``."""
    m = g.num_edges
    if m > MAX_VERTICES:
        raise TooLarge("too many edges to enumerate edge subsets")
    need = 0
    for e in forced:
        need |= 1 << g.edge_id(*e)
    lw = np.full(1 << m, -np.inf)
    for s in range(1 << m):
        if s & need == need:
            lw[s] = rc_weight_log(rc, g, [g.edges[i] for i in range(m) if s >> i & 1])
    return _from_log_weights(m, lw, "edges", g.edges)


def pushforward(dist: DistTable, family: EventFamily) -> DistTable:
    """Law of the occurring-event set under ``dist``."""
    m = len(family.events)
    if m > MAX_EVENTS:
        raise TooLarge(f"{m} events exceeds the cap {MAX_EVENTS}")
    sup = dist.support
    keys = family.occurring_masks(dist.bits[sup])
    probs = np.bincount(keys, weights=dist.probs[sup], minlength=1 << m)
    kind = {"vertex_occupied": "vertices", "oriented_edge_10": "oriented_edges",
            "edge_monochromatic": "edges"}.get(family.kind, "custom_ids")
    return DistTable(m, probs, 0.0, kind, family.events)


# correlation matrices -------------------------------------------------------

def covariance(dist: DistTable) -> np.ndarray:
    sup = dist.support
    b = dist.bits[sup].astype(float)
    p = dist.probs[sup]
    m = b.T @ p
    return (b * p[:, None]).T @ b - np.outer(m, m)


def _interior(m: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    return (m > tol) & (m < 1 - tol)


def influence_matrix(dist: DistTable) -> np.ndarray:
    """``Psi[u, v] = P(X_v=1 | X_u=1) - P(X_v=1 | X_u=0)`` with zero diagonal."""
    m = dist.marginals()
    cov = covariance(dist)
    var = m * (1 - m)
    ok = _interior(m)
    psi = np.zeros_like(cov)
    psi[ok] = cov[ok] / var[ok, None]
    np.fill_diagonal(psi, 0.0)
    return psi


def lambda_max_influence(dist: DistTable) -> float:
    """Largest eigenvalue of the influence matrix via its symmetric similarity form."""
    m = dist.marginals()
    ok = _interior(m)
    if not ok.any():
        return 0.0
    cov = covariance(dist)[np.ix_(ok, ok)]
    var = (m * (1 - m))[ok]
    s = 1 / np.sqrt(var)
    sym = (cov - np.diag(var)) * s[:, None] * s[None, :]
    return float(np.linalg.eigvalsh((sym + sym.T) / 2).max())


def correlation_matrix(dist: DistTable, zero_diagonal: bool = False) -> np.ndarray:
    """``Cor[e, h] = P(h | e) - P(h)`` for events with positive probability, else a zero row."""
    m = dist.marginals()
    cov = covariance(dist)
    ok = m > 1e-300
    cor = np.zeros_like(cov)
    cor[ok] = cov[ok] / m[ok, None]
    if zero_diagonal:
        np.fill_diagonal(cor, 0.0)
    return cor


def lambda_max_correlation(dist: DistTable) -> float:
    """Largest eigenvalue of :func:`correlation_matrix` (literal diagonal), computed symmetrically."""
    m = dist.marginals()
    ok = m > 1e-300
    if not ok.any():
        return 0.0
    cov = covariance(dist)[np.ix_(ok, ok)]
    s = 1 / np.sqrt(m[ok])
    sym = cov * s[:, None] * s[None, :]
    return float(np.linalg.eigvalsh((sym + sym.T) / 2).max())


def lambda_max(matrix: np.ndarray) -> float:
    """Largest real part among the eigenvalues of a square matrix."""
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.eigvals(matrix).real.max())


def second_order_correlation_matrix(dist: DistTable, g: Graph, zero_diagonal: bool = False) -> np.ndarray:
    """Correlation matrix of the events ``sigma_u = 1, sigma_v = 0`` over oriented edges."""
    return correlation_matrix(pushforward(dist, EventFamily.preset("oriented_edge_10", g)), zero_diagonal)


def sw_correlation_matrix(dist: DistTable, g: Graph, zero_diagonal: bool = False) -> np.ndarray:
    """Correlation matrix of the events ``sigma_u = sigma_v`` over edges."""
    return correlation_matrix(pushforward(dist, EventFamily.preset("edge_monochromatic", g)), zero_diagonal)


def total_influence(dist: DistTable, r: int) -> float:
    return 1.0 + float(np.abs(influence_matrix(dist)[r]).sum())


def divergence(kind: str, nu: DistTable, mu: DistTable) -> float:
    """Total variation, chi-square or KL divergence of ``nu`` from ``mu``."""
    if nu.probs.shape != mu.probs.shape:
        raise ValueError("distributions live on different domains")
    p, q = nu.probs, mu.probs
    k = kind.lower()
    if k == "tv":
        return 0.5 * float(np.abs(p - q).sum())
    if np.any((p > 0) & (q <= 0)):
        raise NotAbsolutelyContinuous("nu puts mass where mu does not")
    s = q > 0
    if k == "chi2":
        return float(np.sum(p[s] ** 2 / q[s]) - 1.0)
    if k == "kl":
        t = p > 0
        return float(np.sum(p[t] * np.log(p[t] / q[t])))
    raise ValueError(f"unknown divergence {kind!r}")


def tv(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# transition matrices --------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """Stochastic matrix over the support of ``pi``; ``states`` are bitmasks."""

    states: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)
    chain: str = ""

    @property
    def dim(self) -> int:
        return len(self.states)

    def to_json(self) -> dict:
        return {"chain": self.chain, "states": [f"{int(s):x}" for s in self.states],
                "pi": self.pi.tolist(), "rows": self.rows.tolist()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["from"] + [f"{int(s):x}" for s in self.states])
        for s, row in zip(self.states, self.rows):
            w.writerow([f"{int(s):x}"] + [repr(float(x)) for x in row])
        return buf.getvalue()


def _subset_zeta(a: np.ndarray, m: int) -> np.ndarray:
    # out[S] = sum over T subset of S of a[T]
    a = a.copy()
    for i in range(m):
        v = a.reshape(-1, 2, 1 << i)
        v[:, 1, :] += v[:, 0, :]
    return a


def _superset_zeta(a: np.ndarray, m: int) -> np.ndarray:
    # out[T] = sum over S superset of T of a[S]
    a = a.copy()
    for i in range(m):
        v = a.reshape(-1, 2, 1 << i)
        v[:, 0, :] += v[:, 1, :]
    return a


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


def glauber_matrix(dist: DistTable) -> np.ndarray:
    """Heat-bath Glauber dynamics with a uniformly random site, on the support."""
    sup = dist.support
    index = np.full(1 << dist.n, -1, dtype=np.int64)
    index[sup] = np.arange(len(sup))
    P = np.zeros((len(sup), len(sup)))
    rows = np.arange(len(sup))
    p = dist.probs
    for v in range(dist.n):
        bit = 1 << v
        lo, hi = sup & ~bit, sup | bit
        z = p[lo] + p[hi]
        for tgt in (lo, hi):
            w = p[tgt] / z / dist.n
            keep = index[tgt] >= 0
            np.add.at(P, (rows[keep], index[tgt][keep]), w[keep])
    return P


def event_field_matrix(dist: DistTable, family: EventFamily) -> np.ndarray:
    """Exact down-up chain that drops occurring events and resamples from the tilted law.

    Event ``A`` occurring in the current state is dropped with probability
    ``tilt_A``; the new state is drawn from ``dist`` reweighted by
    ``prod tilt_A`` over its occurring events and conditioned on every kept
    event occurring.
    """
    theta = family.tilt_array
    if np.any(theta <= 0) or np.any(theta > 1):
        raise InvalidTilt("event tilts must lie in (0, 1]")
    m = len(family.events)
    if m > MAX_EVENTS:
        raise TooLarge(f"{m} events exceeds the cap {MAX_EVENTS}")
    sup = dist.support
    occ = family.occurring_matrix(dist.bits[sup])
    keys = occ.astype(np.int64) @ (np.int64(1) << np.arange(m, dtype=np.int64))
    log_theta = np.log(theta)
    tilt_w = np.exp(occ @ log_theta)
    nu = dist.probs[sup] * tilt_w
    g = _superset_zeta(np.bincount(keys, weights=nu, minlength=1 << m), m)
    # ratio (1 - theta) / theta summed in log space per subset
    ratio = (1 - theta) / theta
    all_masks = np.arange(1 << m, dtype=np.int64)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(ratio)
    log_r = np.zeros(1 << m)
    for i in range(m):
        has = (all_masks >> i) & 1
        log_r = log_r + np.where(has == 1, log_ratio[i], 0.0)
    h = np.zeros(1 << m)
    pos = g > 0
    h[pos] = np.exp(log_r[pos]) / g[pos]
    H = _subset_zeta(h, m)
    return tilt_w[:, None] * H[keys[:, None] & keys[None, :]] * nu[None, :]


def _component_partition_weights(g: Graph, lam: float) -> np.ndarray:
    m = g.num_edges
    out = np.empty(1 << m)
    for s in range(1 << m):
        uf = UnionFind(g.n)
        for i in range(m):
            if s >> i & 1:
                uf.union(*g.edges[i])
        roots = {uf.find(v) for v in range(g.n)}
        out[s] = math.prod(1.0 + lam ** uf.size[r] for r in roots)
    return out


def swendsen_wang_matrix(g: Graph, beta: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact Swendsen-Wang chain for the ferromagnetic Ising model.

    Monochromatic edges are kept with probability ``1 - 1/beta``; each
    component of the kept edges is then coloured 1 with probability
    ``lam**|C| / (1 + lam**|C|)``. Returns ``(states, rows)``.
    """
    if beta < 1:
        raise NotFerromagnetic("Swendsen-Wang needs beta >= 1")
    if g.num_edges > MAX_SW_EDGES:
        raise TooLarge(f"{g.num_edges} edges exceeds the Swendsen-Wang cap {MAX_SW_EDGES}")
    p = 1.0 - 1.0 / beta
    m = g.num_edges
    states = np.flatnonzero(np.ones(1 << g.n)) if lam > 0 else np.array([0])
    bits = config_bits(states, g.n)
    us, vs = g.edge_arrays()
    mono = (bits[:, us] == bits[:, vs]).astype(np.int64) @ (np.int64(1) << np.arange(m, dtype=np.int64))
    zc = _component_partition_weights(g, lam)
    sizes = _popcount(np.arange(1 << m))
    h = (p / (1 - p)) ** sizes / zc
    H = _subset_zeta(h, m)
    k = bits.sum(axis=1)
    stay = (1 - p) ** _popcount(mono)
    rows = stay[:, None] * H[mono[:, None] & mono[None, :]] * (lam ** k)[None, :]
    return states, rows


def transition_matrix(system: SpinSystem, chain, max_support: int = MAX_SUPPORT) -> TransitionMatrix:
    """Exact transition matrix of ``chain`` for the Gibbs distribution of ``system``.

    ``chain`` needs a ``kind`` among ``glauber``, ``vertex_field``,
    ``edge_field``, ``event_field`` and ``swendsen_wang``; field chains read
    ``theta`` (removal probability in (0, 1]) and the event chain reads
    ``family``.
    """
    kind = chain.kind
    g = system.graph
    if kind == "swendsen_wang":
        prm = system.params
        if prm.beta != prm.gamma or prm.beta < 1:
            raise NotFerromagnetic("Swendsen-Wang needs a ferromagnetic Ising model (beta = gamma >= 1)")
        if not system.pinning.empty:
            raise ValueError("Swendsen-Wang is defined without pinnings")
        if prm.lam > 1:
            raise InvalidTilt("Swendsen-Wang needs lambda <= 1")
        dist = enumerate(system)
        if len(dist.support) > max_support:
            raise TooLarge("support exceeds the transition-matrix cap")
        states, rows = swendsen_wang_matrix(g, prm.beta, prm.lam)
        return TransitionMatrix(states, rows, dist.probs[states], kind)
    dist = enumerate(system)
    if len(dist.support) > max_support:
        raise TooLarge("support exceeds the transition-matrix cap")
    if kind == "glauber":
        rows = glauber_matrix(dist)
    elif kind in ("vertex_field", "edge_field"):
        theta = float(chain.theta)
        if not 0 < theta <= 1:
            raise InvalidTilt("field dynamics need theta in (0, 1]")
        preset = "vertex_occupied" if kind == "vertex_field" else "oriented_edge_10"
        rows = event_field_matrix(dist, EventFamily.preset(preset, g, theta))
    elif kind == "event_field":
        rows = event_field_matrix(dist, chain.family)
    else:
        raise ValueError(f"unknown chain kind {kind!r}")
    return TransitionMatrix(dist.support, rows, dist.probs[dist.support], kind)


# spectra and mixing ---------------------------------------------------------

def detailed_balance_error(P: TransitionMatrix) -> float:
    flow = P.pi[:, None] * P.rows
    return float(np.abs(flow - flow.T).max()) if P.dim else 0.0


def stationarity_error(P: TransitionMatrix) -> float:
    return float(np.abs(P.pi @ P.rows - P.pi).max()) if P.dim else 0.0


def _symmetrized(P: TransitionMatrix, tol: float) -> np.ndarray:
    if detailed_balance_error(P) > tol:
        raise NotReversible("transition matrix violates detailed balance")
    d = np.sqrt(P.pi)
    S = d[:, None] * P.rows / d[None, :]
    return (S + S.T) / 2


def spectrum(P: TransitionMatrix, tol: float = 1e-8) -> np.ndarray:
    """Eigenvalues of a reversible chain in decreasing order."""
    return np.sort(np.linalg.eigvalsh(_symmetrized(P, tol)))[::-1]


def spectral_gap(P: TransitionMatrix, tol: float = 1e-8) -> tuple[float, float]:
    """``(1 - lambda_2, 1 - max |lambda_i|)`` over the non-top eigenvalues."""
    ev = spectrum(P, tol)
    if len(ev) == 1:
        return 1.0, 1.0
    return float(1 - ev[1]), float(1 - np.abs(ev[1:]).max())


def _worst_tv(Pt: np.ndarray, pi: np.ndarray) -> float:
    return 0.5 * float(np.abs(Pt - pi[None, :]).sum(axis=1).max())


def exact_mixing_time(P: TransitionMatrix, mu: DistTable | None = None, eps: float = 0.25,
                      cap: int = MIXING_CAP) -> int:
    """Smallest ``t`` with ``max_x TV(P^t(x, .), mu) <= eps``.

    The worst-case distance is non-increasing in ``t``, so powers are found by
    repeated squaring followed by a binary search.
    """
    pi = P.pi if mu is None else mu.probs[P.states]
    if _worst_tv(np.eye(P.dim), pi) <= eps:
        return 0
    powers = [P.rows]
    t = 1
    while _worst_tv(powers[-1], pi) > eps:
        if 2 * t > cap:
            raise Nonconvergent(f"not mixed after {cap} steps")
        powers.append(powers[-1] @ powers[-1])
        t *= 2
    if t == 1:
        return 1
    # answer lies in (t/2, t]; build it bit by bit from the stored powers
    lo_pow = powers[-2]
    lo = t // 2
    for j in range(len(powers) - 3, -1, -1):
        cand = lo_pow @ powers[j]
        if _worst_tv(cand, pi) > eps:
            lo_pow = cand
            lo += 1 << j
    return lo + 1


# tensorization and conservation --------------------------------------------

def at_variance_constant(dist: DistTable, max_support: int = MAX_SUPPORT) -> float:
    """Smallest ``K`` with ``Var f <= K * sum_i E[Var(f | X_{-i})]`` for all ``f``."""
    sup = dist.support
    if len(sup) > max_support:
        raise TooLarge("support exceeds the cap")
    if len(sup) == 1:
        return 1.0
    pi = dist.probs[sup]
    # sum_i E[Var_i f] is the Dirichlet form of n times the Glauber chain
    dirichlet = dist.n * pi[:, None] * (np.eye(len(sup)) - glauber_matrix(dist))
    d = 1 / np.sqrt(pi)
    sym = dirichlet * d[:, None] * d[None, :]
    ev = np.sort(np.linalg.eigvalsh((sym + sym.T) / 2))
    # ev[0] ~ 0 belongs to constants; Var is the identity on the complement
    if ev[1] <= 1e-12 * max(1.0, ev[-1]):
        return math.inf
    return float(1 / ev[1])


def conservation_constant_variance(P: TransitionMatrix, mu: DistTable | None = None) -> float:
    """``1 / gap`` of a down-up chain."""
    gap, _ = spectral_gap(P)
    if gap <= 1e-14:
        raise ZeroGap("down-up chain has zero spectral gap")
    return 1.0 / gap


def conservation_constant_joint(joint: np.ndarray, pi: np.ndarray) -> float:
    """Smallest ``R`` with ``Var f(X) <= R * E[Var(f(X) | Y)]`` from a joint table ``joint[y, x]``."""
    py = joint.sum(axis=1)
    keep = py > 0
    J = joint[keep]
    M = (J / py[keep, None]).T @ J  # quadratic form of E[E[f|Y]^2]
    d = 1 / np.sqrt(pi)
    sym = M * d[:, None] * d[None, :]
    ev = np.sort(np.linalg.eigvalsh((sym + sym.T) / 2))[::-1]
    if len(ev) == 1:
        return 1.0
    if 1 - ev[1] <= 1e-14:
        raise ZeroGap("observation determines the state")
    return float(1 / (1 - ev[1]))


def denoising_joint(dist: DistTable, family: EventFamily, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Joint law of ``(Y_t, X)`` where ``Y_t`` reveals each occurring event with probability ``t``.

    Returns ``(joint, observed)`` with ``joint[j, i]`` the probability of the
    ``j``-th observed event mask and the ``i``-th support state.
    """
    sup = dist.support
    keys = family.occurring_masks(dist.bits[sup])
    joint: dict[int, np.ndarray] = {}
    for i, (k, p) in builtins.enumerate(zip(keys, dist.probs[sup])):
        ids = [j for j in range(len(family.events)) if k >> j & 1]
        for r in range(len(ids) + 1):
            w = p * t**r * (1 - t) ** (len(ids) - r)
            for sub in itertools.combinations(ids, r):
                T = sum(1 << j for j in sub)
                joint.setdefault(T, np.zeros(len(sup)))[i] += w
    observed = np.array(sorted(joint), dtype=np.int64)
    return np.stack([joint[T] for T in observed]), observed


def posterior_identity_error(system: SpinSystem, kind: str, t: float) -> float:
    """Largest TV between ``Law(X | Y_t)`` and the tilted, pinned model, over observed ``Y_t``.

    ``kind`` selects the revealed events: ``vertex_field`` (occupied
    vertices), ``edge_field`` (oriented 1-0 edges) or ``swendsen_wang``
    (monochromatic edges).
    """
    g = system.graph
    dist = enumerate(system)
    preset = {"vertex_field": "vertex_occupied", "edge_field": "oriented_edge_10",
              "swendsen_wang": "edge_monochromatic"}[kind]
    fam = EventFamily.preset(preset, g)
    joint, observed = denoising_joint(dist, fam, t)
    sup = dist.support
    worst = 0.0
    for row, T in zip(joint, observed):
        post = np.zeros(1 << g.n)
        post[sup] = row / row.sum()
        ids = [fam.events[j] for j in range(len(fam.events)) if T >> j & 1]
        if kind == "vertex_field":
            params = vertex_tilt(system.params, 1 - t)
            pin = Pinning({v: 1 for v in ids})
        elif kind == "edge_field":
            params = edge_tilt(system.params, 1 / (1 - t))
            pin = Pinning(oriented_events=frozenset(ids))
        else:
            params = edge_tilt(system.params, 1 - t)
            pin = Pinning(mono_edges=frozenset(ids))
        model = enumerate(SpinSystem(g, params, system.pinning.merged(pin)))
        worst = max(worst, tv(post, model.probs))
    return worst


def edwards_sokal_errors(g: Graph, beta: float, lam: float, forced: Sequence = ()) -> tuple[float, float]:
    """TV errors of both halves of the Ising / random-cluster coupling.

    ``forced`` is an edge set ``T`` on which the Ising law is conditioned to be
    monochromatic and the random-cluster law to contain ``T``.
    """
    p = 1.0 - 1.0 / beta
    m = g.num_edges
    need = 0
    for e in forced:
        need |= 1 << g.edge_id(*e)
    ising = enumerate(SpinSystem(g, SpinParams(beta, beta, lam), Pinning(mono_edges=frozenset(map(tuple, forced)))))
    rc = enumerate_random_cluster(RandomClusterParams(p, lam), g, forced)
    # Ising -> random cluster: add each monochromatic edge with probability p
    down = np.zeros(1 << m)
    us, vs = g.edge_arrays()
    for s in ising.support:
        b = ising.bits[s]
        mono = [i for i in range(m) if b[us[i]] == b[vs[i]]]
        free = [i for i in mono if not need >> i & 1]
        for r in range(len(free) + 1):
            w = ising.probs[s] * p**r * (1 - p) ** (len(free) - r)
            for sub in itertools.combinations(free, r):
                down[need | sum(1 << i for i in sub)] += w
    # random cluster -> Ising: colour components independently
    up = np.zeros(1 << g.n)
    for S in rc.support:
        uf = UnionFind(g.n)
        for i in range(m):
            if S >> i & 1:
                uf.union(*g.edges[i])
        roots = sorted({uf.find(v) for v in range(g.n)})
        members = {r: [v for v in range(g.n) if uf.find(v) == r] for r in roots}
        for colours in itertools.product((0, 1), repeat=len(roots)):
            w = rc.probs[S]
            mask = 0
            for r, c in zip(roots, colours):
                size = len(members[r])
                w *= (lam**size if c else 1.0) / (1.0 + lam**size)
                if c:
                    mask |= sum(1 << v for v in members[r])
            up[mask] += w
    return tv(down, rc.probs), tv(up, ising.probs)


def save_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj.to_json() if hasattr(obj, "to_json") else obj, fh)
