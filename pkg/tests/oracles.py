"""Independent brute-force references for the tests.

These use plain loops over configurations and never call into the package's
enumeration or transition-matrix code, so agreement is a genuine two-route
check.
"""
import itertools
import math

import numpy as np


def configs(n):
    for mask in range(1 << n):
        yield mask, tuple(mask >> v & 1 for v in range(n))


def gibbs(n, edges, beta, gamma, lam, assign=None, mono=(), oriented=()):
    """Normalised Gibbs weights indexed by bitmask (bit ``v`` is the spin of ``v``)."""
    assign = assign or {}
    w = np.zeros(1 << n)
    for mask, s in configs(n):
        if any(s[v] != b for v, b in assign.items()):
            continue
        if any(s[u] != s[v] for u, v in mono):
            continue
        if any(not (s[u] == 1 and s[v] == 0) for u, v in oriented):
            continue
        x = lam ** sum(s)
        for u, v in edges:
            if s[u] == s[v] == 1:
                x *= beta
            elif s[u] == s[v] == 0:
                x *= gamma
        w[mask] = x
    tot = w.sum()
    return w / tot if tot > 0 else np.full_like(w, np.nan)


def glauber(probs, n):
    P = np.zeros((1 << n, 1 << n))
    for x in range(1 << n):
        if probs[x] == 0:
            continue
        for v in range(n):
            a, b = x & ~(1 << v), x | (1 << v)
            tot = probs[a] + probs[b]
            P[x, a] += probs[a] / tot / n
            P[x, b] += probs[b] / tot / n
    return P


def down_up(probs, n, events, theta):
    """Bayes down-up chain: drop each occurring event with probability ``theta``, then resample.

    ``events(s)`` returns the set of occurring event ids of configuration ``s``.
    """
    N = 1 << n
    occ = [frozenset(events(s)) for _, s in configs(n)]
    P = np.zeros((N, N))
    for x in range(N):
        if probs[x] == 0:
            continue
        A = sorted(occ[x])
        for r in range(len(A) + 1):
            for T in itertools.combinations(A, r):
                pT = (1 - theta) ** r * theta ** (len(A) - r)
                if pT == 0:
                    continue
                T = set(T)
                # posterior of X given the revealed set T
                post = np.array([probs[y] * (1 - theta) ** r * theta ** (len(occ[y]) - r) if T <= occ[y] else 0.0
                                 for y in range(N)])
                P[x] += pT * post / post.sum()
    return P


def vertex_events(s):
    return {v for v, b in enumerate(s) if b}


def oriented_events(edges):
    def ev(s):
        out = set()
        for u, v in edges:
            if s[u] == 1 and s[v] == 0:
                out.add((u, v))
            if s[v] == 1 and s[u] == 0:
                out.add((v, u))
        return out
    return ev


def mono_events(edges):
    return lambda s: {e for e in edges if s[e[0]] == s[e[1]]}


def _components(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    comps = {}
    for v in range(n):
        comps.setdefault(find(v), []).append(v)
    return list(comps.values())


def swendsen_wang(n, edges, beta, lam):
    p = 1 - 1 / beta
    N = 1 << n
    P = np.zeros((N, N))
    for x, s in configs(n):
        mono = [e for e in edges if s[e[0]] == s[e[1]]]
        for r in range(len(mono) + 1):
            for S in itertools.combinations(mono, r):
                w = p**r * (1 - p) ** (len(mono) - r)
                comps = _components(n, S)
                for colours in itertools.product((0, 1), repeat=len(comps)):
                    q, y = w, 0
                    for c, col in zip(comps, colours):
                        a = lam ** len(c)
                        q *= (a if col else 1.0) / (1 + a)
                        if col:
                            y |= sum(1 << v for v in c)
                    P[x, y] += q
    return P


def influence(probs, n):
    """``Psi[u, v] = P(v | u = 1) - P(v | u = 0)`` by direct conditioning."""
    psi = np.zeros((n, n))
    for u in range(n):
        m1 = [x for x in range(1 << n) if x >> u & 1]
        m0 = [x for x in range(1 << n) if not x >> u & 1]
        z1, z0 = probs[m1].sum(), probs[m0].sum()
        if z1 == 0 or z0 == 0:
            continue
        for v in range(n):
            if v != u:
                psi[u, v] = sum(probs[x] for x in m1 if x >> v & 1) / z1 - sum(probs[x] for x in m0 if x >> v & 1) / z0
    return psi


def random_f_sup(probs, numer, denom, trials, rng):
    """Largest ratio ``numer(f)/denom(f)`` over random test functions on the support."""
    best = 0.0
    sup = np.flatnonzero(probs > 0)
    for _ in range(trials):
        f = np.zeros(len(probs))
        f[sup] = rng.normal(size=len(sup))
        d = denom(f)
        if d > 1e-14:
            best = max(best, numer(f) / d)
    return best


def w1_dual(p, xs, q, ys):
    """Kantorovich dual of the Hamming 1-Wasserstein distance, as a separate linear program."""
    from scipy.optimize import linprog

    pts = sorted(set(xs) | set(ys))
    idx = {x: i for i, x in enumerate(pts)}
    c = np.zeros(len(pts))
    for pi, x in zip(p, xs):
        c[idx[x]] -= pi
    for qi, y in zip(q, ys):
        c[idx[y]] += qi
    rows, rhs = [], []
    for a in pts:
        for b in pts:
            if a != b:
                r = np.zeros(len(pts))
                r[idx[a]], r[idx[b]] = 1, -1
                rows.append(r)
                rhs.append(bin(a ^ b).count("1"))
    res = linprog(c, A_ub=np.array(rows), b_ub=rhs, bounds=(None, None), method="highs")
    return -res.fun


def edge_bounded_graphs(max_edges):
    """All graphs without isolated vertices and with at most ``max_edges`` edges, up to isomorphism.

    Each graph is a multiset of connected components taken from the networkx
    atlas; returns ``(n, edges)`` pairs, starting with the single vertex.
    """
    import networkx as nx

    conn = [g for g in nx.graph_atlas_g()[1:] if nx.is_connected(g) and 1 <= g.number_of_edges() <= max_edges]
    out = [(1, [])]

    def extend(start, n, edges):
        for i in range(start, len(conn)):
            g = conn[i]
            if len(edges) + g.number_of_edges() > max_edges:
                continue
            new = edges + [(n + u, n + v) for u, v in g.edges()]
            out.append((n + g.number_of_nodes(), new))
            extend(i, n + g.number_of_nodes(), new)

    extend(0, 0, [])
    return out
