"""Lower-bound experiment for spectral independence on regular bipartite graphs.

On a ``Delta``-regular bipartite graph of girth ``g`` the influence between
vertices at distance ``i < g/2`` is close to ``((1-delta)/(Delta-1))^i``, so
``lambda_max(Psi)`` is at least a truncated geometric sum and at most the
tight ceiling ``Delta(1-delta)/((Delta-1) delta)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotBipartiteRegular, TooLarge
from .exact_oracle import covariance, gibbs, influence_matrix, lambda_max_influence
from .graph_core import Graph, bipartition, distance_matrix, girth
from .spin_model import SpinParams
from .tree_analysis import lambda_for_slack, uniqueness

MAX_LOWER_BOUND_VERTICES = 18


def truncated_lower_sum(delta: float, Delta: int, r: int) -> float:
    """``sum_{i=1}^r Delta (Delta-1)^(i-1) ((1-delta)/(Delta-1))^i``."""
    q = (1 - delta) / (Delta - 1)
    return float(sum(Delta * (Delta - 1) ** (i - 1) * q**i for i in range(1, r + 1)))


def si_ceiling(delta: float, Delta: int) -> float:
    return Delta * (1 - delta) / ((Delta - 1) * delta)


@dataclass
class LowerBoundRun:
    """Outcome of one lower-bound experiment.

    ``distance_rows`` holds, per distance class ``i``, the number of ordered
    pairs, the mean/min/max of ``|Psi(u, v)|`` and the prediction
    ``((1-delta)/(Delta-1))^i``.
    """

    graph_id: str
    n: int
    Delta: int
    girth: float
    params: SpinParams
    slack: float
    lambda_max_measured: float
    ceiling: float
    r: int
    truncated_sum: float
    test_vector_quotient: float
    distance_rows: list = field(default_factory=list)
    tol: float = 1e-6

    @property
    def sandwich_holds(self) -> bool:
        return (self.truncated_sum <= self.lambda_max_measured + self.tol
                and self.lambda_max_measured <= self.ceiling + self.tol)

    @property
    def rayleigh_holds(self) -> bool:
        return self.test_vector_quotient <= self.lambda_max_measured + self.tol

    def row(self, i: int) -> dict:
        return next(r for r in self.distance_rows if r["distance"] == i)

    def to_json(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "n": self.n,
            "Delta": self.Delta,
            "girth": self.girth if math.isfinite(self.girth) else "inf",
            "params": self.params.to_json(),
            "slack": self.slack,
            "lambda_max_measured": self.lambda_max_measured,
            "ceiling": self.ceiling,
            "r": self.r,
            "truncated_sum": self.truncated_sum,
            "test_vector_quotient": self.test_vector_quotient,
            "sandwich_holds": self.sandwich_holds,
            "rayleigh_holds": self.rayleigh_holds,
            "distance_rows": self.distance_rows,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["distance", "pairs", "mean_abs", "min_abs", "max_abs", "predicted"]
        w = csv.writer(buf)
        w.writerow(["graph_id", *cols])
        for r in self.distance_rows:
            w.writerow([self.graph_id, *(r[c] for c in cols)])
        return buf.getvalue()


def _check_graph(graph: Graph) -> int:
    side = bipartition(graph)
    if graph.n == 0 or side is None or not graph.is_regular() or graph.max_degree < 3:
        raise NotBipartiteRegular("needs a regular bipartite graph of degree at least 3")
    if graph.n > MAX_LOWER_BOUND_VERTICES:
        raise TooLarge(f"{graph.n} vertices exceeds {MAX_LOWER_BOUND_VERTICES}")
    return graph.max_degree


def run_lower_bound_experiment(graph: Graph, slack_target: float, beta: float = 0.0, gamma: float = 1.0,
                               graph_id: str = "graph", tol: float = 1e-6) -> LowerBoundRun:
    """Tune ``lambda`` to slack ``slack_target`` at branching ``Delta - 1`` and measure the influences."""
    Delta = _check_graph(graph)
    lam = lambda_for_slack(beta, gamma, Delta - 1, slack_target)
    params = SpinParams(beta, gamma, lam)
    slack = uniqueness(params, Delta - 1).slack
    dist = gibbs(graph, params)
    psi = influence_matrix(dist)
    lam_max = lambda_max_influence(dist)

    # symmetric form of Psi, evaluated at the +-1 vector of the bipartition
    m = dist.marginals()
    var = m * (1 - m)
    sym = covariance(dist) / np.sqrt(np.outer(var, var))
    np.fill_diagonal(sym, 0.0)
    x = np.where(bipartition(graph) == 0, 1.0, -1.0)
    quotient = float(x @ sym @ x / (x @ x))

    g = girth(graph)
    r = int(g // 2) - 1 if math.isfinite(g) else graph.n
    dm = distance_matrix(graph)
    q = (1 - slack_target) / (Delta - 1)
    rows = []
    for i in range(1, int(dm.max()) + 1):
        mask = dm == i
        vals = np.abs(psi[mask])
        rows.append({"distance": i, "pairs": int(mask.sum()), "mean_abs": float(vals.mean()),
                     "min_abs": float(vals.min()), "max_abs": float(vals.max()), "predicted": q**i})
    return LowerBoundRun(graph_id, graph.n, Delta, g, params, slack, lam_max, si_ceiling(slack_target, Delta), r,
                         truncated_lower_sum(slack_target, Delta, r), quotient, rows, tol)
