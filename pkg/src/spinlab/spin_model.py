"""Two-spin parameters, Gibbs weights, tilts, pinnings and event families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InconsistentPinning, InvalidParams, NonPositiveTilt, ZeroField
from .graph_core import Graph, components


@dataclass(frozen=True)
class SpinParams:
    """Edge activities ``beta``, ``gamma`` and external field ``lam``.

    The weight of a configuration is ``beta**m1 * gamma**m0 * lam**k`` where
    ``m1`` (``m0``) counts edges with both endpoints 1 (0) and ``k`` counts
    1-spins.
    """

    beta: float
    gamma: float
    lam: float

    def __post_init__(self):
        for name in ("beta", "gamma", "lam"):
            val = getattr(self, name)
            if not isinstance(val, (int, float, np.floating, np.integer)) or math.isnan(val):
                raise InvalidParams(f"{name} must be a real number")
        if self.gamma <= 0:
            raise InvalidParams("gamma must be positive")
        if self.beta < 0:
            raise InvalidParams("beta must be non-negative")
        if self.lam < 0:
            raise InvalidParams("lambda must be non-negative")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def antiferromagnetic(self) -> bool:
        return self.beta * self.gamma < 1

    @property
    def ferromagnetic(self) -> bool:
        return self.beta * self.gamma > 1

    @property
    def hard_constraint(self) -> bool:
        return self.beta == 0

    def to_json(self) -> dict:
        return {"beta": self.beta, "gamma": self.gamma, "lambda": self.lam}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SpinParams":
        extra = set(obj) - {"beta", "gamma", "lambda"}
        if extra:
            raise InvalidParams(f"unknown parameter keys {sorted(extra)}")
        return cls(obj["beta"], obj["gamma"], obj["lambda"])


def _canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Pinning:
    """Constraints on configurations.

    ``assignments`` fixes single spins, ``mono_edges`` forces edges to be
    monochromatic and ``oriented_events`` forces ``sigma_u = 1, sigma_v = 0``.
    """

    assignments: Mapping[int, int] = field(default_factory=dict)
    mono_edges: frozenset = frozenset()
    oriented_events: frozenset = frozenset()

    def __post_init__(self):
        assign = {int(k): int(v) for k, v in dict(self.assignments).items()}
        if any(v not in (0, 1) for v in assign.values()):
            raise InconsistentPinning("pinned spins must be 0 or 1")
        object.__setattr__(self, "assignments", assign)
        object.__setattr__(self, "mono_edges", frozenset(_canon(*map(int, e)) for e in self.mono_edges))
        object.__setattr__(self, "oriented_events", frozenset(tuple(map(int, e)) for e in self.oriented_events))
        self.vertex_constraints()

    def vertex_constraints(self) -> dict[int, int]:
        """All single-spin constraints, including those implied by oriented events."""
        out = dict(self.assignments)
        for u, v in self.oriented_events:
            for w, s in ((u, 1), (v, 0)):
                if out.get(w, s) != s:
                    raise InconsistentPinning(f"vertex {w} pinned to both values")
                out[w] = s
        return out

    @property
    def empty(self) -> bool:
        return not (self.assignments or self.mono_edges or self.oriented_events)

    def merged(self, other: "Pinning") -> "Pinning":
        a = dict(self.assignments)
        for k, v in other.assignments.items():
            if a.get(k, v) != v:
                raise InconsistentPinning(f"vertex {k} pinned to both values")
            a[k] = v
        return Pinning(a, self.mono_edges | other.mono_edges, self.oriented_events | other.oriented_events)

    def to_json(self) -> dict:
        return {
            "assignments": {str(k): v for k, v in sorted(self.assignments.items())},
            "mono_edges": sorted(list(e) for e in self.mono_edges),
            "oriented_events": sorted(list(e) for e in self.oriented_events),
        }

    @classmethod
    def from_json(cls, obj: Mapping | None) -> "Pinning":
        if not obj:
            return cls()
        extra = set(obj) - {"assignments", "mono_edges", "oriented_events"}
        if extra:
            raise InconsistentPinning(f"unknown pinning keys {sorted(extra)}")
        assign = obj.get("assignments", {})
        if isinstance(assign, list):
            assign = {int(v): int(s) for v, s in assign}
        return cls({int(k): int(v) for k, v in assign.items()},
                   frozenset(tuple(e) for e in obj.get("mono_edges", [])),
                   frozenset(tuple(e) for e in obj.get("oriented_events", [])))


NO_PINNING = Pinning()


@dataclass(frozen=True)
class RandomClusterParams:
    """Edge probability ``p`` in [0, 1) and vertex activity ``lam`` in [0, 1]."""

    p: float
    lam: float

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise InvalidParams("p must lie in [0, 1)")
        if not 0 <= self.lam <= 1:
            raise InvalidParams("lambda must lie in [0, 1]")

    @classmethod
    def from_ising(cls, beta: float, lam: float) -> "RandomClusterParams":
        if beta < 1:
            raise InvalidParams("the random-cluster correspondence needs beta >= 1")
        return cls(1.0 - 1.0 / beta, lam)


# configurations -------------------------------------------------------------

def config_bits(masks, n: int) -> np.ndarray:
    """0/1 matrix whose row ``i`` holds the spins of bitmask ``masks[i]`` (vertex v is bit v)."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[..., None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int8)


def config_mask(sigma: Sequence[int]) -> int:
    return int(sum(int(s) << i for i, s in enumerate(sigma)))


def _as_bits(sigma, n: int) -> np.ndarray:
    if isinstance(sigma, (int, np.integer)):
        return config_bits(np.array([sigma]), n)
    arr = np.asarray(sigma, dtype=np.int8)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[1] != n:
        raise ValueError(f"configuration length {arr.shape[1]} != {n}")
    return arr


def _xlogy(count: np.ndarray, base: float) -> np.ndarray:
    # count * log(base) with 0 * log 0 = 0
    if base > 0:
        return count * math.log(base)
    return np.where(count > 0, -np.inf, 0.0)


def edge_counts(g: Graph, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row counts of 1-1 and 0-0 edges."""
    us, vs = g.edge_arrays()
    a, b = bits[:, us].astype(np.int64), bits[:, vs].astype(np.int64)
    m1 = (a & b).sum(axis=1)
    m0 = ((1 - a) & (1 - b)).sum(axis=1)
    return m1, m0


def feasible_mask(g: Graph, bits: np.ndarray, pin: Pinning | None) -> np.ndarray:
    ok = np.ones(bits.shape[0], dtype=bool)
    if pin is None or pin.empty:
        return ok
    for v, s in pin.vertex_constraints().items():
        ok &= bits[:, v] == s
    for u, v in pin.mono_edges:
        g.edge_id(u, v)
        ok &= bits[:, u] == bits[:, v]
    for u, v in pin.oriented_events:
        g.edge_id(u, v)
    return ok


def log_weights(params: SpinParams, g: Graph, bits: np.ndarray, pin: Pinning | None = None) -> np.ndarray:
    """Vectorised :func:`log_weight` over the rows of a 0/1 matrix."""
    m1, m0 = edge_counts(g, bits)
    k = bits.sum(axis=1).astype(np.int64)
    lw = _xlogy(m1, params.beta) + _xlogy(m0, params.gamma) + _xlogy(k, params.lam)
    return np.where(feasible_mask(g, bits, pin), lw, -np.inf)


def log_weight(params: SpinParams, g: Graph, sigma, pin: Pinning | None = None) -> float:
    """``log(beta**m1 * gamma**m0 * lam**k)``, or ``-inf`` if ``sigma`` violates ``pin``."""
    return float(log_weights(params, g, _as_bits(sigma, g.n), pin)[0])


# tilts ----------------------------------------------------------------------

def edge_tilt(params: SpinParams, theta: float) -> SpinParams:
    """Multiply both edge activities by ``theta``."""
    if not theta > 0:
        raise NonPositiveTilt(f"tilt must be positive, got {theta}")
    return SpinParams(theta * params.beta, theta * params.gamma, params.lam)


def vertex_tilt(params: SpinParams, theta: float) -> SpinParams:
    """Multiply the external field by ``theta``."""
    if not theta > 0:
        raise NonPositiveTilt(f"tilt must be positive, got {theta}")
    return SpinParams(params.beta, params.gamma, theta * params.lam)


def flip(params: SpinParams) -> SpinParams:
    """Parameters of the law of the complemented configuration."""
    if params.lam <= 0:
        raise ZeroField("cannot flip a system with zero external field")
    if params.beta <= 0:
        raise InvalidParams("flipping a hard-constraint system gives gamma = 0")
    return SpinParams(params.gamma, params.beta, 1.0 / params.lam)


# event families -------------------------------------------------------------

@dataclass(frozen=True)
class EventFamily:
    """A finite family of events on configurations with removal tilts.

    ``events`` holds hashable ids; ``indicator(bits)`` returns a boolean matrix
    with one column per event. Preset kinds are built with :meth:`preset`.
    """

    kind: str
    events: tuple
    indicator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    tilts: tuple = ()

    def __post_init__(self):
        t = np.broadcast_to(np.asarray(self.tilts if len(self.tilts) else [1.0], dtype=float),
                            (len(self.events),))
        if np.any(t < 0) or np.any(t > 1):
            raise NonPositiveTilt("event tilts must lie in [0, 1]")
        object.__setattr__(self, "tilts", tuple(float(x) for x in t))

    @property
    def tilt_array(self) -> np.ndarray:
        return np.asarray(self.tilts, dtype=float)

    def with_tilts(self, tilts) -> "EventFamily":
        t = np.broadcast_to(np.asarray(tilts, dtype=float), (len(self.events),))
        return EventFamily(self.kind, self.events, self.indicator, tuple(t))

    @classmethod
    def preset(cls, kind: str, g: Graph, tilts=1.0) -> "EventFamily":
        us, vs = g.edge_arrays()
        if kind == "vertex_occupied":
            return cls(kind, tuple(range(g.n)), lambda b: b.astype(bool), ()).with_tilts(tilts)
        if kind == "oriented_edge_10":
            ou = np.array([e[0] for e in g.oriented_edges], dtype=np.int64)
            ov = np.array([e[1] for e in g.oriented_edges], dtype=np.int64)
            return cls(kind, g.oriented_edges,
                       lambda b: (b[:, ou] == 1) & (b[:, ov] == 0), ()).with_tilts(tilts)
        if kind == "edge_monochromatic":
            return cls(kind, g.edges, lambda b: b[:, us] == b[:, vs], ()).with_tilts(tilts)
        raise ValueError(f"unknown preset event family {kind!r}")

    @classmethod
    def custom(cls, events: Sequence, indicator: Callable[[np.ndarray], np.ndarray], tilts=1.0) -> "EventFamily":
        return cls("custom", tuple(events), indicator, ()).with_tilts(tilts)

    def occurring_matrix(self, bits: np.ndarray) -> np.ndarray:
        return np.asarray(self.indicator(np.asarray(bits)), dtype=bool).reshape(len(bits), len(self.events))

    def occurring_masks(self, bits: np.ndarray) -> np.ndarray:
        """Bitmask over event indices of the occurring events, one per row."""
        occ = self.occurring_matrix(bits).astype(np.int64)
        if len(self.events) > 62:
            raise ValueError("event bitmasks support at most 62 events")
        return occ @ (np.int64(1) << np.arange(len(self.events), dtype=np.int64))


def events_occurring(fam: EventFamily, sigma, n: int | None = None) -> set:
    """Ids of the events of ``fam`` that occur in ``sigma``."""
    bits = _as_bits(sigma, n if n is not None else len(sigma))
    row = fam.occurring_matrix(bits)[0]
    return {fam.events[i] for i in np.flatnonzero(row)}


# random-cluster -------------------------------------------------------------

def rc_weight_log(rc: RandomClusterParams, g: Graph, S: Iterable[Sequence[int]]) -> float:
    """Log random-cluster weight of the edge set ``S``."""
    S = [tuple(e) for e in S]
    comps = components(g, S)
    k = len(S)
    out = float(_xlogy(np.array(k), rc.p)) + (g.num_edges - k) * math.log1p(-rc.p)
    for c in comps:
        out += math.log1p(rc.lam ** len(c))
    return out


@dataclass(frozen=True)
class SpinSystem:
    """A graph together with parameters and a pinning."""

    graph: Graph
    params: SpinParams
    pinning: Pinning = NO_PINNING

    def with_params(self, params: SpinParams) -> "SpinSystem":
        return SpinSystem(self.graph, params, self.pinning)

    def with_pinning(self, pinning: Pinning) -> "SpinSystem":
        return SpinSystem(self.graph, self.params, pinning)
