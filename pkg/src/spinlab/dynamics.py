"""Samplers for Glauber, vertex-field, edge-field, event-field and Swendsen-Wang chains.

Randomness comes from the counter-based Philox4x64 generator. Step ``s`` of a
run with seed ``k`` draws from ``Philox(key=k, counter=(0, 0, phase, s))``,
with phase 0 for the down step (or site choice) and phase 1 for the up step,
so the stream consumed by an up step never shifts the coins of later steps.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InfeasibleState, InvalidTilt, NotFerromagnetic, UpStepTooLarge
from .exact_oracle import MAX_VERTICES, DistTable, enumerate as enumerate_gibbs
from .graph_core import UnionFind
from .spin_model import (
    EventFamily,
    Pinning,
    SpinParams,
    SpinSystem,
    config_bits,
    edge_tilt,
    log_weight,
    vertex_tilt,
)

PHASE_DOWN = 0
PHASE_UP = 1
KINDS = ("glauber", "vertex_field", "edge_field", "event_field", "swendsen_wang")


@dataclass(frozen=True)
class ChainSpec:
    """Which chain to run and how.

    ``theta`` is the removal probability of field chains; ``family`` carries
    the events and tilts of the event chain; ``up_mode`` is ``exact`` or
    ``nested_glauber`` with ``sweeps`` single-site updates per up step
    (default ``ceil(10 n log n)``).
    """

    kind: str
    theta: float | None = None
    family: EventFamily | None = None
    up_mode: str = "exact"
    sweeps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown chain kind {self.kind!r}")
        if self.kind in ("vertex_field", "edge_field"):
            if self.theta is None or not 0 < self.theta <= 1:
                raise InvalidTilt("field chains need theta in (0, 1]")
        if self.kind == "event_field" and self.family is None:
            raise ValueError("event_field needs an event family")
        if self.up_mode not in ("exact", "nested_glauber"):
            raise ValueError(f"unknown up_mode {self.up_mode!r}")

    def describe(self) -> dict:
        out = {"kind": self.kind, "up_mode": self.up_mode, "seed": self.seed}
        if self.theta is not None:
            out["theta"] = self.theta
        if self.family is not None:
            out["family"] = self.family.kind
            out["tilts"] = list(self.family.tilts)
        if self.sweeps is not None:
            out["sweeps"] = self.sweeps
        return out


def step_rng(seed: int, step: int, phase: int) -> np.random.Generator:
    """Generator for one phase of one step."""
    key = int(seed) % (1 << 128)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, phase, step]))


def default_sweeps(n: int) -> int:
    return max(10, math.ceil(10 * n * math.log(max(n, 2))))


# local moves ----------------------------------------------------------------

class _Blocks:
    """Vertices grouped by forced-monochromatic edges, with pinned blocks marked."""

    def __init__(self, system: SpinSystem):
        g = system.graph
        uf = UnionFind(g.n)
        for u, v in system.pinning.mono_edges:
            uf.union(u, v)
        self.block_of = [uf.find(v) for v in range(g.n)]
        members: dict[int, list[int]] = {}
        for v, r in enumerate(self.block_of):
            members.setdefault(r, []).append(v)
        self.members = members
        fixed = system.pinning.vertex_constraints()
        self.frozen = {r for r, vs in members.items() if any(v in fixed for v in vs)}


def _block_log_ratio(system: SpinSystem, block: Sequence[int], sigma: np.ndarray) -> float:
    """``log w(block = 1) - log w(block = 0)`` with the rest of ``sigma`` fixed."""
    prm = system.params
    g = system.graph
    inside = set(block)
    lb = math.log(prm.beta) if prm.beta > 0 else -math.inf
    lg = math.log(prm.gamma)
    ll = math.log(prm.lam) if prm.lam > 0 else -math.inf
    internal = ones = zeros = 0
    for v in block:
        for u in g.adjacency[v]:
            if u in inside:
                internal += 1
            elif sigma[u]:
                ones += 1
            else:
                zeros += 1
    internal //= 2
    out = len(block) * ll
    if internal:
        out += internal * (lb - lg)
    if ones:
        out += ones * lb
    out -= zeros * lg
    return out


def _check_feasible(system: SpinSystem, sigma: np.ndarray) -> None:
    if log_weight(system.params, system.graph, sigma, system.pinning) == -math.inf:
        raise InfeasibleState("configuration has zero weight")


def _heat_bath(system: SpinSystem, blocks: _Blocks, sigma: np.ndarray, v: int, u: float) -> None:
    root = blocks.block_of[v]
    if root in blocks.frozen:
        return
    block = blocks.members[root]
    r = _block_log_ratio(system, block, sigma)
    p1 = 0.0 if r == -math.inf else 1.0 / (1.0 + math.exp(-r)) if r > -700 else 0.0
    sigma[block] = 1 if u < p1 else 0


def glauber_step(system: SpinSystem, sigma, rng: np.random.Generator, validate: bool = True) -> np.ndarray:
    """Heat-bath update at a uniformly random vertex (whole block when edges are forced monochromatic)."""
    sigma = np.array(sigma, dtype=np.int8)
    if validate:
        _check_feasible(system, sigma)
    v = int(rng.integers(system.graph.n))
    _heat_bath(system, _Blocks(system), sigma, v, float(rng.random()))
    return sigma


def _nested_glauber(system: SpinSystem, sigma: np.ndarray, rng: np.random.Generator, sweeps: int) -> np.ndarray:
    sigma = sigma.copy()
    blocks = _Blocks(system)
    n = system.graph.n
    sites = rng.integers(n, size=sweeps)
    coins = rng.random(sweeps)
    for v, u in zip(sites, coins):
        _heat_bath(system, blocks, sigma, int(v), float(u))
    return sigma


# exact up steps -------------------------------------------------------------

def _exact_table(system: SpinSystem) -> DistTable:
    if system.graph.n > MAX_VERTICES:
        raise UpStepTooLarge(f"exact up step needs n <= {MAX_VERTICES}")
    return enumerate_gibbs(system)


def _draw(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    idx = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
    idx = min(idx, len(probs) - 1)
    while probs[idx] == 0:
        idx -= 1
    return config_bits(np.array([idx]), n)[0]


def _pinned_up_system(system: SpinSystem, params: SpinParams, extra: Pinning) -> SpinSystem:
    return SpinSystem(system.graph, params, system.pinning.merged(extra))


def _up(system: SpinSystem, up_sys: SpinSystem, sigma: np.ndarray, rng, up_mode: str, sweeps) -> np.ndarray:
    if up_mode == "exact":
        return _draw(_exact_table(up_sys).probs, system.graph.n, rng)
    return _nested_glauber(up_sys, sigma, rng, sweeps or default_sweeps(system.graph.n))


# dedicated field chains -----------------------------------------------------

def _vertex_field_up_system(system: SpinSystem, theta: float, sigma, kept) -> SpinSystem:
    return _pinned_up_system(system, vertex_tilt(system.params, theta), Pinning({int(v): 1 for v in kept}))


def _edge_field_up_system(system: SpinSystem, theta: float, sigma, kept_edges) -> SpinSystem:
    pins = {}
    for u, v in kept_edges:
        pins[u] = int(sigma[u])
        pins[v] = int(sigma[v])
    return _pinned_up_system(system, edge_tilt(system.params, 1 / theta), Pinning(pins))


def vertex_field_step(system: SpinSystem, theta: float, sigma, seed: int, step: int,
                      up_mode: str = "exact", sweeps: int | None = None) -> np.ndarray:
    """Drop each occupied vertex with probability ``theta``; resample with the field scaled by ``theta``."""
    sigma = np.asarray(sigma, dtype=np.int8)
    occupied = np.flatnonzero(sigma)
    coins = step_rng(seed, step, PHASE_DOWN).random(len(occupied))
    kept = occupied[coins >= theta]
    up_sys = _vertex_field_up_system(system, theta, sigma, kept)
    return _up(system, up_sys, sigma, step_rng(seed, step, PHASE_UP), up_mode, sweeps)


def edge_field_step(system: SpinSystem, theta: float, sigma, seed: int, step: int,
                    up_mode: str = "exact", sweeps: int | None = None) -> np.ndarray:
    """Drop each bichromatic edge with probability ``theta``; pin the endpoints of the rest and
    resample with edge activities divided by ``theta``."""
    sigma = np.asarray(sigma, dtype=np.int8)
    bich = [e for e in system.graph.edges if sigma[e[0]] != sigma[e[1]]]
    coins = step_rng(seed, step, PHASE_DOWN).random(len(bich))
    kept = [e for e, c in zip(bich, coins) if c >= theta]
    up_sys = _edge_field_up_system(system, theta, sigma, kept)
    return _up(system, up_sys, sigma, step_rng(seed, step, PHASE_UP), up_mode, sweeps)


# generic event chain --------------------------------------------------------

def _event_up_system(system: SpinSystem, fam: EventFamily, kept_ids: Sequence) -> SpinSystem:
    theta = fam.tilt_array
    if len(theta) and not np.allclose(theta, theta[0]):
        raise UpStepTooLarge("nested up step supports uniform tilts only")
    t = float(theta[0]) if len(theta) else 1.0
    if fam.kind == "vertex_occupied":
        return _pinned_up_system(system, vertex_tilt(system.params, t), Pinning({v: 1 for v in kept_ids}))
    if fam.kind == "oriented_edge_10":
        return _pinned_up_system(system, edge_tilt(system.params, 1 / t),
                                 Pinning(oriented_events=frozenset(kept_ids)))
    if fam.kind == "edge_monochromatic":
        return _pinned_up_system(system, edge_tilt(system.params, t), Pinning(mono_edges=frozenset(kept_ids)))
    raise UpStepTooLarge("custom families support exact up steps only")


def _event_up_law(system: SpinSystem, fam: EventFamily, kept_mask: np.ndarray) -> np.ndarray:
    """``mu * prod theta^{occurring}`` restricted to configurations where all kept events occur."""
    dist = _exact_table(system)
    occ = fam.occurring_matrix(dist.bits)
    w = dist.probs * np.exp(occ.astype(float) @ np.log(fam.tilt_array))
    ok = np.all(occ[:, kept_mask], axis=1) if kept_mask.any() else np.ones(len(w), bool)
    w = np.where(ok, w, 0.0)
    return w / w.sum()


def event_field_step(system: SpinSystem, fam: EventFamily, sigma, seed: int, step: int,
                     up_mode: str = "exact", sweeps: int | None = None) -> np.ndarray:
    """Drop each occurring event with its tilt; resample from the event-tilted law given the kept events."""
    sigma = np.asarray(sigma, dtype=np.int8)
    theta = fam.tilt_array
    if np.any(theta <= 0) or np.any(theta > 1):
        raise InvalidTilt("event tilts must lie in (0, 1]")
    occ = fam.occurring_matrix(sigma[None, :])[0]
    coins = step_rng(seed, step, PHASE_DOWN).random(len(theta))
    kept = occ & (coins >= theta)
    rng = step_rng(seed, step, PHASE_UP)
    if up_mode == "exact":
        return _draw(_event_up_law(system, fam, kept), system.graph.n, rng)
    ids = [fam.events[i] for i in np.flatnonzero(kept)]
    return _nested_glauber(_event_up_system(system, fam, ids), sigma, rng,
                           sweeps or default_sweeps(system.graph.n))


# Swendsen-Wang --------------------------------------------------------------

def _sw_check(system: SpinSystem) -> tuple[float, float]:
    prm = system.params
    if prm.beta != prm.gamma or prm.beta < 1:
        raise NotFerromagnetic("Swendsen-Wang needs a ferromagnetic Ising model (beta = gamma >= 1)")
    if prm.lam > 1:
        raise InvalidTilt("Swendsen-Wang needs lambda <= 1")
    if not system.pinning.empty:
        raise ValueError("Swendsen-Wang is defined without pinnings")
    return 1.0 - 1.0 / prm.beta, prm.lam


def swendsen_wang_step(system: SpinSystem, sigma, seed: int, step: int) -> np.ndarray:
    """Keep monochromatic edges with probability ``1 - 1/beta``; colour each cluster 1 w.p. ``lam^|C|/(1+lam^|C|)``."""
    p, lam = _sw_check(system)
    g = system.graph
    sigma = np.asarray(sigma, dtype=np.int8)
    coins = step_rng(seed, step, PHASE_DOWN).random(g.num_edges)
    uf = UnionFind(g.n)
    for (u, v), c in zip(g.edges, coins):
        if sigma[u] == sigma[v] and c < p:
            uf.union(u, v)
    roots = [uf.find(v) for v in range(g.n)]
    order = sorted(set(roots))
    colour_coins = step_rng(seed, step, PHASE_UP).random(len(order))
    colour = {}
    for r, c in zip(order, colour_coins):
        a = lam ** uf.size[r]
        colour[r] = 1 if c < a / (1 + a) else 0
    return np.array([colour[r] for r in roots], dtype=np.int8)


# exact one-step laws --------------------------------------------------------

def _subsets(items: Sequence):
    k = len(items)
    for mask in range(1 << k):
        yield [items[i] for i in range(k) if mask >> i & 1], bin(mask).count("1")


def step_law(system: SpinSystem, chain: ChainSpec, sigma) -> np.ndarray:
    """Exact law of one step from ``sigma`` over all ``2^n`` configurations.

    Sums over every outcome of the down-step coins, using the same up-step
    construction as the matching sampler.
    """
    sigma = np.asarray(sigma, dtype=np.int8)
    g = system.graph
    out = np.zeros(1 << g.n)
    if chain.kind == "glauber":
        base = int(sum(int(s) << i for i, s in enumerate(sigma)))
        dist = _exact_table(system)
        for v in range(g.n):
            lo, hi = base & ~(1 << v), base | (1 << v)
            z = dist.probs[lo] + dist.probs[hi]
            out[lo] += dist.probs[lo] / z / g.n
            out[hi] += dist.probs[hi] / z / g.n
        return out
    if chain.kind == "vertex_field":
        th = chain.theta
        occupied = list(np.flatnonzero(sigma))
        for kept, k in _subsets(occupied):
            w = (1 - th) ** k * th ** (len(occupied) - k)
            out += w * _exact_table(_vertex_field_up_system(system, th, sigma, kept)).probs
        return out
    if chain.kind == "edge_field":
        th = chain.theta
        bich = [e for e in g.edges if sigma[e[0]] != sigma[e[1]]]
        for kept, k in _subsets(bich):
            w = (1 - th) ** k * th ** (len(bich) - k)
            out += w * _exact_table(_edge_field_up_system(system, th, sigma, kept)).probs
        return out
    if chain.kind == "event_field":
        fam = chain.family
        theta = fam.tilt_array
        occ = np.flatnonzero(fam.occurring_matrix(sigma[None, :])[0])
        for kept, _ in _subsets(list(occ)):
            mask = np.zeros(len(theta), bool)
            mask[kept] = True
            w = float(np.prod(np.where(mask[occ], 1 - theta[occ], theta[occ])))
            if w > 0:
                out += w * _event_up_law(system, fam, mask)
        return out
    if chain.kind == "swendsen_wang":
        p, lam = _sw_check(system)
        mono = [e for e in g.edges if sigma[e[0]] == sigma[e[1]]]
        for kept, k in _subsets(mono):
            w = p**k * (1 - p) ** (len(mono) - k)
            if w == 0:
                continue
            uf = UnionFind(g.n)
            for u, v in kept:
                uf.union(u, v)
            roots = sorted({uf.find(v) for v in range(g.n)})
            members = [[v for v in range(g.n) if uf.find(v) == r] for r in roots]
            for colours, _ in _subsets(list(range(len(roots)))):
                mask, pr = 0, w
                for i, vs in enumerate(members):
                    a = lam ** len(vs)
                    if i in colours:
                        pr *= a / (1 + a)
                        mask |= sum(1 << v for v in vs)
                    else:
                        pr *= 1 / (1 + a)
                out[mask] += pr
        return out
    raise ValueError(f"unknown chain kind {chain.kind!r}")


# trajectories ---------------------------------------------------------------

def _to_hex(sigma: np.ndarray) -> str:
    return format(int("".join(str(int(b)) for b in sigma[::-1]) or "0", 2), "x")


@dataclass
class Trajectory:
    """Recorded states of a run with a checksum over every visited state."""

    states: list
    step_count: int
    rng_trace_checksum: str
    metadata: dict = field(default_factory=dict)

    def hex_states(self) -> list[str]:
        return [_to_hex(s) for s in self.states]

    def dump(self, prefix: str | Path) -> tuple[Path, Path]:
        prefix = Path(prefix)
        states = prefix.with_suffix(".states.txt")
        meta = prefix.with_suffix(".meta.json")
        states.write_text("\n".join(self.hex_states()) + "\n")
        meta.write_text(json.dumps({**self.metadata, "step_count": self.step_count,
                                    "checksum": self.rng_trace_checksum}, indent=2))
        return states, meta


def initial_state(system: SpinSystem) -> np.ndarray:
    """All zeros with pinned spins (and blocks sharing a pinned vertex) set."""
    sigma = np.zeros(system.graph.n, dtype=np.int8)
    blocks = _Blocks(system)
    for v, s in system.pinning.vertex_constraints().items():
        sigma[blocks.members[blocks.block_of[v]]] = s
    _check_feasible(system, sigma)
    return sigma


def run_chain(system: SpinSystem, chain: ChainSpec, steps: int, record="all",
              initial=None) -> Trajectory:
    """Run ``steps`` transitions from ``initial`` (default :func:`initial_state`).

    ``record`` is ``all``, ``last`` or an integer thinning interval.
    """
    sigma = initial_state(system) if initial is None else np.asarray(initial, dtype=np.int8).copy()
    _check_feasible(system, sigma)
    if chain.kind == "swendsen_wang":
        _sw_check(system)
    h = hashlib.sha256()
    h.update(sigma.tobytes())
    states = [sigma.copy()]
    thin = 1 if record == "all" else (None if record == "last" else int(record))
    blocks = _Blocks(system) if chain.kind == "glauber" else None
    for t in range(1, steps + 1):
        if chain.kind == "glauber":
            rng = step_rng(chain.seed, t, PHASE_DOWN)
            v = int(rng.integers(system.graph.n))
            _heat_bath(system, blocks, sigma, v, float(rng.random()))
        elif chain.kind == "vertex_field":
            sigma = vertex_field_step(system, chain.theta, sigma, chain.seed, t, chain.up_mode, chain.sweeps)
        elif chain.kind == "edge_field":
            sigma = edge_field_step(system, chain.theta, sigma, chain.seed, t, chain.up_mode, chain.sweeps)
        elif chain.kind == "event_field":
            sigma = event_field_step(system, chain.family, sigma, chain.seed, t, chain.up_mode, chain.sweeps)
        else:
            sigma = swendsen_wang_step(system, sigma, chain.seed, t)
        h.update(sigma.tobytes())
        if thin and t % thin == 0:
            states.append(sigma.copy())
    if record == "last" and steps > 0:
        states = [sigma.copy()]
    meta = {"chain": chain.describe(), "n": system.graph.n, "steps": steps,
            "params": system.params.to_json(), "rng": "Philox4x64"}
    if chain.up_mode == "nested_glauber":
        meta["sweeps"] = chain.sweeps or default_sweeps(system.graph.n)
    return Trajectory(states, steps, h.hexdigest(), meta)
