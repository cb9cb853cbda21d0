"""Graphs, deterministic generators, self-avoiding-walk trees and components."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    EdgeNotInGraph,
    InfeasibleFamily,
    RootPinned,
    SelfLoop,
    TreeTooLarge,
    VertexOutOfRange,
)

SAW_NODE_LIMIT = 10**6


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Attributes
    ----------
    n : int
        Number of vertices.
    edges : tuple of (int, int)
        Edges with ``u < v``, in insertion order.
    adjacency : tuple of tuple of int
        Sorted neighbour list of every vertex.
    oriented_edges : tuple of (int, int)
        Both orientations of every edge: ``(u, v)`` then ``(v, u)``.
    """

    n: int
    edges: tuple
    adjacency: tuple = field(repr=False)
    oriented_edges: tuple = field(repr=False)
    max_degree: int = 0
    edge_index: Mapping = field(repr=False, default=None, compare=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def is_regular(self) -> bool:
        return self.n == 0 or all(len(a) == self.max_degree for a in self.adjacency)

    def edge_id(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        try:
            return self.edge_index[key]
        except KeyError:
            raise EdgeNotInGraph(f"edge {key} is not in the graph") from None

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        e = np.asarray(self.edges, dtype=np.int64)
        return e[:, 0], e[:, 1]

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def build_graph(n: int, edge_list: Iterable[Sequence[int]]) -> Graph:
    """Validate an edge list and build a :class:`Graph`."""
    n = int(n)
    if n < 0:
        raise VertexOutOfRange("vertex count must be non-negative")
    edges = []
    seen = {}
    for pair in edge_list:
        u, v = (int(x) for x in pair)
        if not (0 <= u < n and 0 <= v < n):
            raise VertexOutOfRange(f"edge ({u},{v}) outside 0..{n - 1}")
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise DuplicateEdge(f"edge {key} listed twice")
        seen[key] = len(edges)
        edges.append(key)
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    adjacency = tuple(tuple(sorted(a)) for a in adj)
    oriented = tuple(o for u, v in edges for o in ((u, v), (v, u)))
    max_degree = max((len(a) for a in adjacency), default=0)
    return Graph(n, tuple(edges), adjacency, oriented, max_degree, seen)


# generators -----------------------------------------------------------------

def _random_regular(n: int, d: int, seed: int, max_tries: int = 100000) -> Graph:
    if n <= 0 or d < 0 or d >= n or (n * d) % 2:
        raise InfeasibleFamily(f"no simple {d}-regular graph on {n} vertices")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_tries):
        perm = rng.permutation(stubs).reshape(-1, 2)
        if np.any(perm[:, 0] == perm[:, 1]):
            continue
        keys = {tuple(sorted(map(int, p))) for p in perm}
        if len(keys) == len(perm):
            return build_graph(n, sorted(keys))
    raise InfeasibleFamily("rejection sampling did not produce a simple graph")


def generate(family: str, *args, **kwargs) -> Graph:
    """Build a graph from a named family.

    Families: ``path(n)``, ``cycle(n)``, ``complete(n)``,
    ``complete_bipartite(a, b)``, ``star(n)`` (``n`` vertices, centre 0),
    ``balanced_tree(branching, depth)``, ``heawood``, ``prism(k)``,
    ``hypercube(d)``, ``empty(n)`` and ``random_regular(n, degree, seed)``.
    """
    f = family.lower()
    a = list(args) + list(kwargs.values())
    if f == "path":
        (n,) = a
        return build_graph(n, [(i, i + 1) for i in range(n - 1)])
    if f == "cycle":
        (n,) = a
        if n < 3:
            raise InfeasibleFamily("a simple cycle needs at least 3 vertices")
        return build_graph(n, [(i, (i + 1) % n) for i in range(n)])
    if f == "complete":
        (n,) = a
        return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    if f == "complete_bipartite":
        p, q = a
        return build_graph(p + q, [(i, p + j) for i in range(p) for j in range(q)])
    if f == "star":
        (n,) = a
        if n < 1:
            raise InfeasibleFamily("a star needs a centre")
        return build_graph(n, [(0, i) for i in range(1, n)])
    if f == "empty":
        (n,) = a
        return build_graph(n, [])
    if f == "balanced_tree":
        b, depth = a
        if b < 1 or depth < 0:
            raise InfeasibleFamily("branching >= 1 and depth >= 0 required")
        edges, frontier, nxt = [], [0], 1
        for _ in range(depth):
            new = []
            for p in frontier:
                for _ in range(b):
                    edges.append((p, nxt))
                    new.append(nxt)
                    nxt += 1
            frontier = new
        return build_graph(nxt, edges)
    if f == "heawood":
        # LCF notation [5,-5]^7
        edges = {tuple(sorted((i, (i + 1) % 14))) for i in range(14)}
        edges |= {tuple(sorted((i, (i + 5) % 14))) for i in range(0, 14, 2)}
        return build_graph(14, sorted(edges))
    if f == "prism":
        (k,) = a
        if k < 3:
            raise InfeasibleFamily("prism needs k >= 3")
        edges = [(i, (i + 1) % k) for i in range(k)]
        edges += [(k + i, k + (i + 1) % k) for i in range(k)]
        edges += [(i, k + i) for i in range(k)]
        return build_graph(2 * k, edges)
    if f == "hypercube":
        (d,) = a
        n = 1 << d
        return build_graph(n, [(x, x | (1 << i)) for x in range(n) for i in range(d) if not x >> i & 1])
    if f == "random_regular":
        n, d, seed = a
        return _random_regular(int(n), int(d), int(seed))
    raise InfeasibleFamily(f"unknown graph family {family!r}")


# queries --------------------------------------------------------------------

def components(g: Graph, edge_subset: Iterable[Sequence[int]] = ()) -> list[list[int]]:
    """Connected components of ``(V, edge_subset)``, each sorted, ordered by minimum."""
    uf = UnionFind(g.n)
    for e in edge_subset:
        u, v = e
        g.edge_id(u, v)
        uf.union(u, v)
    groups: dict[int, list[int]] = {}
    for v in range(g.n):
        groups.setdefault(uf.find(v), []).append(v)
    return sorted(groups.values(), key=lambda c: c[0])


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; unreachable vertices get ``-1``."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for w in g.adjacency[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def distance_matrix(g: Graph) -> np.ndarray:
    return np.stack([bfs_distances(g, s) for s in range(g.n)]) if g.n else np.zeros((0, 0), int)


def girth(g: Graph) -> float:
    """Length of a shortest cycle (``inf`` for forests), by BFS from every vertex."""
    best = float("inf")
    for s in range(g.n):
        dist = [-1] * g.n
        parent = [-1] * g.n
        dist[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in g.adjacency[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    q.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def bipartition(g: Graph) -> np.ndarray | None:
    """Side labels (0/1) of a proper 2-colouring, or ``None`` if not bipartite."""
    side = np.full(g.n, -1, dtype=np.int64)
    for s in range(g.n):
        if side[s] >= 0:
            continue
        side[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in g.adjacency[u]:
                if side[w] < 0:
                    side[w] = 1 - side[u]
                    q.append(w)
                elif side[w] == side[u]:
                    return None
    return side


# self-avoiding-walk tree ----------------------------------------------------

@dataclass(frozen=True)
class PinnedTree:
    """Rooted tree with a partial pinning and a map back to the source graph.

    ``parent[root] == -1``; ``truncated`` lists free leaves cut by a depth cap.
    """

    tree: Graph
    root: int
    pinning: Mapping[int, int]
    origin_map: tuple
    parent: tuple
    truncated: frozenset = frozenset()

    def children(self) -> list[list[int]]:
        ch = [[] for _ in range(self.tree.n)]
        for v, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(v)
        return ch


def saw_tree(
    g: Graph,
    root: int,
    pinning: Mapping[int, int] | None = None,
    ordering: Sequence[int] | None = None,
    depth_cap: int | None = None,
    node_limit: int = SAW_NODE_LIMIT,
) -> PinnedTree:
    """Self-avoiding-walk tree of ``g`` rooted at ``root``.

    A walk that returns to a vertex already on it ends in a pinned copy:
    spin 0 when the vertex following the earlier visit ranks above the
    vertex just before closing, spin 1 otherwise. Vertices pinned in
    ``pinning`` become pinned leaves.

    Parameters
    ----------
    ordering : sequence of int, optional
        Vertices listed from lowest to highest rank; defaults to index order.
    depth_cap : int, optional
        Free copies at this depth are kept as unpinned leaves and reported in
        ``truncated``.
    """
    pinning = dict(pinning or {})
    if not 0 <= root < g.n:
        raise VertexOutOfRange(f"root {root} outside the graph")
    if root in pinning:
        raise RootPinned(f"root {root} is pinned")
    if ordering is None:
        rank = list(range(g.n))
    else:
        if sorted(ordering) != list(range(g.n)):
            raise ValueError("ordering must be a permutation of the vertices")
        rank = [0] * g.n
        for r, v in enumerate(ordering):
            rank[v] = r

    origin = [root]
    parent = [-1]
    tpin: dict[int, int] = {}
    truncated = set()
    edges = []
    # stack entries: (tree node, walk as list of graph vertices)
    stack = [(0, [root])]
    while stack:
        node, walk = stack.pop()
        w = walk[-1]
        prev = walk[-2] if len(walk) > 1 else None
        if depth_cap is not None and len(walk) - 1 >= depth_cap:
            if any(u != prev for u in g.adjacency[w]):
                truncated.add(node)
            continue
        position = {v: i for i, v in enumerate(walk)}
        for u in g.adjacency[w]:
            if u == prev:
                continue
            child = len(origin)
            if child >= node_limit:
                raise TreeTooLarge(f"SAW tree exceeds {node_limit} nodes")
            origin.append(u)
            parent.append(node)
            edges.append((node, child))
            if u in position:
                nxt = walk[position[u] + 1]
                tpin[child] = 0 if rank[nxt] > rank[w] else 1
            elif u in pinning:
                tpin[child] = int(pinning[u])
            else:
                stack.append((child, walk + [u]))
    tree = build_graph(len(origin), edges)
    return PinnedTree(tree, 0, tpin, tuple(origin), tuple(parent), frozenset(truncated))


# serialization --------------------------------------------------------------

def graph_from_json(obj: Mapping) -> Graph:
    return build_graph(obj["n"], obj["edges"])


def load_graph(path: str | Path) -> Graph:
    """Read a graph from JSON ``{n, edges}`` or from ``u v`` lines.

    For the text form ``n`` is one more than the largest vertex id unless a
    first line ``n <count>`` is given.
    """
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return graph_from_json(json.loads(text))
    n = None
    edges = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n" and len(parts) == 2:
            n = int(parts[1])
            continue
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return build_graph(n, edges)


def save_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_json()))
