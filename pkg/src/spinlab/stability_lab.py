"""Constants of the localization analysis, measured exactly or evaluated in closed form.

Measured quantities (coupling independence, correlation eigenvalues,
conservation constants) come from brute-force enumeration. Formula values are
the explicit rates and bounds of the analysis. Each comparison is packaged in
a :class:`BoundReport`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, sparse

from .errors import (
    DeltaOutOfRange,
    HardConstraint,
    InputsOutOfRegime,
    InvalidParams,
    LambdaTooLarge,
    NotAntiferromagnetic,
    NotCritical,
    RegimeViolation,
    ThetaOutOfRange,
    TooLarge,
)
from .exact_oracle import (
    DistTable,
    conservation_constant_joint,
    conservation_constant_variance,
    denoising_joint,
    enumerate as enumerate_gibbs,
    lambda_max_correlation,
    pushforward,
    transition_matrix,
)
from .graph_core import Graph, UnionFind
from .spin_model import EventFamily, Pinning, SpinParams, SpinSystem, edge_tilt, vertex_tilt
from .tree_analysis import uniqueness

MAX_CI_SUPPORT = 512
CRITICAL_TOL = 1e-6
VERDICTS = ("holds", "violated", "not_applicable")


@dataclass
class BoundReport:
    """Comparison of a measured quantity against a formula value.

    ``side`` is ``upper`` when the formula bounds the measurement from above
    and ``lower`` otherwise; ``margin`` is positive on the asserted side.
    """

    name: str
    formula_value: float
    measured_value: float
    verdict: str
    margin: float
    side: str = "upper"
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "formula": _num(self.formula_value),
            "measured": _num(self.measured_value),
            "margin": _num(self.margin),
            "verdict": self.verdict,
            "side": self.side,
            "details": {k: _num(v) if isinstance(v, float) else v for k, v in self.details.items()},
        }


def _num(x):
    # JSON has no inf or nan
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def compare(name: str, formula: float, measured: float, side: str = "upper", tol: float = 1e-9,
            **details) -> BoundReport:
    """Build a report with verdict ``holds`` iff ``measured`` is on ``side`` of ``formula`` within ``tol``."""
    margin = formula - measured if side == "upper" else measured - formula
    if math.isnan(margin):
        margin = math.inf if math.isinf(formula) else math.nan
    ok = margin >= -tol
    return BoundReport(name, float(formula), float(measured), "holds" if ok else "violated", float(margin),
                       side, details)


def not_applicable(name: str, formula: float = math.nan, measured: float = math.nan, **details) -> BoundReport:
    return BoundReport(name, float(formula), float(measured), "not_applicable", math.nan, "upper", details)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["name", "formula", "measured", "margin", "verdict"])
    for r in reports:
        w.writerow([r.name, repr(r.formula_value), repr(r.measured_value), repr(r.margin), r.verdict])
    return buf.getvalue()


def reports_to_json(reports) -> list[dict]:
    return [r.to_json() for r in reports]


# down operator ---------------------------------------------------------------

def _theta_vector(theta, m: int) -> np.ndarray:
    th = np.broadcast_to(np.asarray(theta, dtype=float), (m,)).copy()
    if np.any(th <= 0) or np.any(th > 1):
        raise ThetaOutOfRange("tilts must lie in (0, 1]")
    return th


def down_operator(dist: DistTable, theta) -> DistTable:
    """Law of the set obtained by keeping each element ``i`` independently with probability ``theta[i]``."""
    th = _theta_vector(theta, dist.n)
    a = dist.probs.copy()
    for i in range(dist.n):
        v = a.reshape(-1, 2, 1 << i)
        v[:, 0, :] += (1 - th[i]) * v[:, 1, :]
        v[:, 1, :] *= th[i]
    return DistTable(dist.n, a, 0.0, dist.domain_kind, dist.labels)


def si_reduction_check(mu: DistTable, theta, tol: float = 1e-9) -> BoundReport:
    """``lambda_max(Cor_mu) <= lambda_max(Cor_pi) * max_i 1/theta_i`` with ``pi`` the thinned law."""
    th = _theta_vector(theta, mu.n)
    lhs = lambda_max_correlation(mu)
    rhs_eig = lambda_max_correlation(down_operator(mu, th))
    scale = float(1 / th.min())
    return compare("si_reduction", rhs_eig * scale, lhs, tol=tol, thinned_lambda_max=rhs_eig, scale=scale)


# coupling independence -------------------------------------------------------

def _hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = a[:, None] ^ b[None, :]
    out = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


def wasserstein_hamming(p: np.ndarray, xs: np.ndarray, q: np.ndarray, ys: np.ndarray) -> float:
    """Exact 1-Wasserstein distance between ``sum p_i delta_{xs_i}`` and ``sum q_j delta_{ys_j}``.

    States are bitmasks and the ground metric is Hamming distance. The
    transport problem is solved as a linear program.
    """
    cost = _hamming(np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)).astype(float)
    if len(p) == 1:
        return float(cost[0] @ q)
    if len(q) == 1:
        return float(p @ cost[:, 0])
    a, b = len(p), len(q)
    rows = sparse.kron(sparse.eye(a), np.ones((1, b)))
    cols = sparse.kron(np.ones((1, a)), sparse.eye(b))
    A = sparse.vstack([rows, cols]).tocsr()
    res = optimize.linprog(cost.ravel(), A_eq=A, b_eq=np.concatenate([p, q]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport solve failed: {res.message}")
    return float(res.fun)


def coupling_independence_exact(dist: DistTable, max_support: int = MAX_CI_SUPPORT) -> float:
    """Worst W1 distance between conditionals whose pinnings differ in exactly one coordinate.

    Runs over every pinned set ``L``, every coordinate ``i`` in ``L`` and every
    feasible pinning of ``L - {i}`` that admits both values at ``i``.
    """
    sup = dist.support
    if len(sup) > max_support:
        raise TooLarge(f"support {len(sup)} exceeds {max_support}")
    probs = dist.probs[sup]
    states = sup.astype(np.int64)
    best = 0.0
    for L in range(1, 1 << dist.n):
        groups: dict[int, np.ndarray] = {}
        keys = states & L
        for k in np.unique(keys):
            groups[int(k)] = np.flatnonzero(keys == k)
        for i in range(dist.n):
            bit = 1 << i
            if not L & bit:
                continue
            for k0, idx0 in groups.items():
                if k0 & bit or (k0 | bit) not in groups:
                    continue
                idx1 = groups[k0 | bit]
                p = probs[idx0] / probs[idx0].sum()
                q = probs[idx1] / probs[idx1].sum()
                best = max(best, wasserstein_hamming(p, states[idx0], q, states[idx1]))
    return best


# stability matrices ----------------------------------------------------------

def _critical_instance(system: SpinSystem, tol: float = CRITICAL_TOL) -> bool:
    prm, g = system.params, system.graph
    Delta = g.max_degree
    if Delta < 3 or not prm.antiferromagnetic or prm.lam <= 0:
        return False
    if prm.gamma > 1 and not g.is_regular():
        return False
    return abs(uniqueness(prm, Delta - 1).slack) <= tol


def ci_under_otimes_constant(beta: float, gamma: float, Delta: int, theta: float) -> float:
    """Coupling independence of the interaction-tilted law at removal time ``theta``."""
    s = math.sqrt(beta * gamma)
    if not 0 <= theta <= 1 - s:
        raise ThetaOutOfRange(f"theta must lie in [0, {1 - s}]")
    if theta == 0 or s == 0:
        return math.inf
    return 1 + Delta * (1 - s) / ((Delta - 1) * s * theta)


def _sample_vertex_pinning(rng: np.random.Generator, dist: DistTable, frac: float) -> dict[int, int]:
    x = int(rng.choice(dist.support, p=dist.probs[dist.support]))
    return {v: x >> v & 1 for v in range(dist.n) if rng.random() < frac}


def stability_matrix_checks(system: SpinSystem, theta: float, samples: int = 4, seed: int = 0,
                            tol: float = 1e-9) -> list[BoundReport]:
    """Covariance and second-order correlation checks at removal time ``theta``.

    (a) for occupied sets ``S`` drawn from the vertex-field process,
    ``Cov((1-theta) * mu^S) <= C diag(mean)`` with ``C`` the exact coupling
    independence of the tilted law; (b) for sampled vertex pinnings ``tau``,
    ``lambda_max`` of the oriented-edge correlation matrix of
    ``(1/(1-theta)) (x) mu^tau`` is at most ``2 Delta C`` with ``C`` from
    :func:`ci_under_otimes_constant`.
    """
    if not 0 <= theta < 1:
        raise ThetaOutOfRange("theta must lie in [0, 1)")
    g = system.graph
    rng = np.random.default_rng(seed)
    base = enumerate_gibbs(system)
    out: list[BoundReport] = []

    occupied: list[dict[int, int]] = [{}]
    for _ in range(samples):
        x = int(rng.choice(base.support, p=base.probs[base.support]))
        occupied.append({v: 1 for v in range(g.n) if x >> v & 1 and rng.random() < theta})
    for S in occupied:
        pin = system.pinning.merged(Pinning(S))
        nu = enumerate_gibbs(SpinSystem(g, vertex_tilt(system.params, 1 - theta), pin))
        C = coupling_independence_exact(nu)
        out.append(compare("cov_vs_ci", C, lambda_max_correlation(nu), tol=tol, pinned=sorted(S)))

    s = math.sqrt(max(system.params.beta * system.params.gamma, 0.0))
    applicable = _critical_instance(system) and theta <= 1 - s
    pins: list[dict[int, int]] = [{}]
    for _ in range(samples):
        pins.append(_sample_vertex_pinning(rng, base, 0.5))
    fam = EventFamily.preset("oriented_edge_10", g)
    tilted = edge_tilt(system.params, 1 / (1 - theta))
    for tau in pins:
        pin = system.pinning.merged(Pinning(tau))
        pi = enumerate_gibbs(SpinSystem(g, tilted, pin))
        measured = lambda_max_correlation(pushforward(pi, fam))
        tag = {f"{v}": b for v, b in sorted(tau.items())}
        if not applicable:
            out.append(not_applicable("edge_correlation_vs_2DeltaC", measured=measured, pinning=tag))
            continue
        C = ci_under_otimes_constant(system.params.beta, system.params.gamma, g.max_degree, theta)
        out.append(compare("edge_correlation_vs_2DeltaC", 2 * g.max_degree * C, measured, tol=tol, C=C,
                           pinning=tag))
    return out


# Swendsen-Wang gap bound -----------------------------------------------------

def _min_rate_integral(A: float, K: float, top: float, cutoff: float = math.inf) -> float:
    """``int_1^top min(A/(s-1), K/s) ds`` where the ``K`` branch exists only for ``s <= cutoff``."""
    if top <= 1:
        return 0.0
    s_star = K / (K - A) if K > A else math.inf  # where the two branches cross
    s_star = min(s_star, cutoff)
    mid = min(top, s_star)
    out = K * math.log(mid)
    if top > mid:
        out += A * math.log((top - 1) / (mid - 1))
    return out


def _quad_rate_integral(A: float, K: float, top: float, cutoff: float = math.inf) -> float:
    def f(s):
        a = A / (s - 1) if s > 1 else math.inf
        k = K / s if s <= cutoff else math.inf
        return min(a, k)

    if top <= 1:
        return 0.0
    s_star = min(K / (K - A) if K > A else math.inf, cutoff)
    pts = [p for p in (s_star,) if 1 < p < top]
    val, _ = integrate.quad(f, 1, top, points=pts or None, epsabs=1e-10, epsrel=1e-12, limit=200)
    return float(val)


def _sw_checks(beta: float, lam: float, delta: float) -> None:
    if beta < 1:
        raise InvalidParams("Swendsen-Wang bounds need beta >= 1")
    if not 0 < delta <= 1:
        raise DeltaOutOfRange("delta must lie in (0, 1]")
    if lam > 1 - delta + 1e-12:
        raise LambdaTooLarge(f"lambda {lam} exceeds 1 - delta = {1 - delta}")


def sw_spectral_integral(beta: float, Delta: int, delta: float, method: str = "closed") -> float:
    """``int_0^{1-1/beta} C(t)/(1-t) dt`` for the spectral rate of the Swendsen-Wang process.

    With ``s = (1-t) beta`` the integrand is ``min(2/(delta^2 (s-1)), 6 Delta/(e delta^3 s))``
    over ``s`` in ``[1, beta]``.
    """
    A = 2 / delta**2
    K = 6 * Delta / (math.e * delta**3)
    if method == "closed":
        return _min_rate_integral(A, K, beta)
    return _quad_rate_integral(A, K, beta)


def sw_gap_lower_bound(beta: float, lam: float, Delta: int, delta: float) -> float:
    """Spectral gap lower bound ``exp(-I)/2`` for Swendsen-Wang on graphs of maximum degree ``Delta``."""
    _sw_checks(beta, lam, delta)
    return 0.5 * math.exp(-sw_spectral_integral(beta, Delta, delta))


def sw_entropy_integral(beta: float, lam: float, Delta: int, delta: float, method: str = "closed") -> float:
    """Integral of the entropic rate ``min(2 s/(delta^2 (s-1)), 321 Delta^2/delta^4)`` against ``ds/s``.

    The constant branch is present only while ``s <= 1 + delta^2/Delta^2``;
    the rates are stated for ``delta`` in ``(0, 0.01)``.
    """
    if not 0 < delta < 0.01:
        raise DeltaOutOfRange("entropic rates are stated for delta in (0, 0.01)")
    _sw_checks(beta, lam, delta)
    A = 2 / delta**2
    K = 321 * Delta**2 / delta**4
    cutoff = 1 + delta**2 / Delta**2
    if method == "closed":
        return _min_rate_integral(A, K, beta, cutoff)
    return _quad_rate_integral(A, K, beta, cutoff)


# edge-field conservation ------------------------------------------------------

def edge_field_R_bound(params: SpinParams, Delta: int, n: int) -> float:
    """``(beta gamma)^(-Delta) (e n)^(2 Delta^2 (1 - s)/((Delta - 1) s))`` with ``s = sqrt(beta gamma)``."""
    if params.beta == 0:
        raise HardConstraint("the conservation bound needs beta > 0")
    try:
        slack = uniqueness(params, Delta - 1).slack
    except NotAntiferromagnetic as exc:
        raise NotCritical(str(exc)) from exc
    if abs(slack) > CRITICAL_TOL:
        raise NotCritical(f"slack {slack:.3g} at branching {Delta - 1} is not zero")
    bg = params.beta * params.gamma
    s = math.sqrt(bg)
    expo = 2 * Delta**2 * (1 - s) / ((Delta - 1) * s)
    return bg ** (-Delta) * (math.e * n) ** expo


def edge_field_R_exact(system: SpinSystem) -> tuple[float, float]:
    """Minimal conservation constant up to time ``1 - sqrt(beta gamma)``, by two routes.

    The first is ``1/gap`` of the edge-field down-up chain with removal
    probability ``sqrt(beta gamma)``; the second is the variance ratio of the
    joint law of the observation and the configuration.
    """
    from .dynamics import ChainSpec

    s = math.sqrt(system.params.beta * system.params.gamma)
    if not 0 < s < 1:
        raise InvalidParams("needs 0 < beta*gamma < 1")
    P = transition_matrix(system, ChainSpec("edge_field", theta=s))
    dist = enumerate_gibbs(system)
    joint, _ = denoising_joint(dist, EventFamily.preset("oriented_edge_10", system.graph), 1 - s)
    return conservation_constant_variance(P), conservation_constant_joint(joint, dist.probs[dist.support])


# marginal bound ---------------------------------------------------------------

def marginal_bound_check(system: SpinSystem, S=(), tau=None, delta: float = 0.5,
                         tol: float = 1e-12) -> BoundReport:
    """Check ``mu^{S,tau}(u)/mu^{S,tau}(not u) <= (1+delta)^(-k_u)`` for every free vertex ``u``.

    ``S`` is a set of edges forced monochromatic, ``tau`` a vertex pinning and
    ``k_u`` the size of the component of ``u`` in ``(V, S)``. A vertex is free
    when its component carries no pinned vertex.
    """
    g, prm = system.graph, system.params
    Delta = max(g.max_degree, 1)
    if prm.beta != prm.gamma:
        raise RegimeViolation("the marginal bound is stated for the Ising model (beta = gamma)")
    w = delta**2 / Delta**2
    if not (1 - w - tol <= prm.beta <= 1 + w + tol) or prm.lam > 1 - delta + tol:
        raise RegimeViolation(f"needs |beta - 1| <= {w} and lambda <= {1 - delta}")
    tau = dict(tau or {})
    pin = system.pinning.merged(Pinning(tau, frozenset(map(tuple, S))))
    dist = enumerate_gibbs(SpinSystem(g, prm, pin))
    uf = UnionFind(g.n)
    for u, v in pin.mono_edges:
        uf.union(u, v)
    pinned_roots = {uf.find(v) for v in pin.vertex_constraints()}
    m = dist.marginals()
    worst, per_vertex = 0.0, {}
    for u in range(g.n):
        if uf.find(u) in pinned_roots:
            continue
        k = sum(1 for v in range(g.n) if uf.find(v) == uf.find(u))
        ratio = m[u] / (1 - m[u]) if m[u] < 1 else math.inf
        scaled = ratio * (1 + delta) ** k
        per_vertex[str(u)] = {"k": k, "ratio": float(ratio), "bound": (1 + delta) ** (-k)}
        worst = max(worst, scaled)
    return compare("marginal_bound", 1.0, worst, tol=tol, per_vertex=per_vertex)


# mixing-time evaluators ---------------------------------------------------------

def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709 else math.inf


def _alpha(beta: float, gamma: float) -> float:
    return 2 + 1 / beta if beta > 0 else 2 + gamma + 1 / gamma


def edge_tilting_exponents(Delta: int, bar_beta: float) -> tuple[float, float]:
    """``(k, eps)`` with ``k = Delta (1 - bar_beta)``."""
    k = Delta * (1 - bar_beta)
    eps = 2 * k * ((k + 1) * Delta - k) / ((Delta - 1) * (Delta - k))
    return k, eps


def vertex_tilting_kappa(Delta: int, bar_beta: float) -> float:
    bc = (Delta - 2) / Delta
    return math.sqrt((1 - bar_beta**2) / (bc**2 - bar_beta**2))


def _require_critical(params: SpinParams, Delta: int, regular: bool = True) -> None:
    if Delta < 3:
        raise InputsOutOfRegime("needs Delta >= 3")
    if not params.antiferromagnetic or params.lam <= 0:
        raise InputsOutOfRegime("needs antiferromagnetic parameters with lambda > 0")
    if params.gamma > 1 and not regular:
        raise InputsOutOfRegime("gamma > 1 needs a regular graph")
    if abs(uniqueness(params, Delta - 1).slack) > CRITICAL_TOL:
        raise InputsOutOfRegime("parameters are not critical at branching Delta - 1")


def mixing_bound_evaluators(which: str, *, params: SpinParams | None = None, Delta: int = 3, n: int = 2,
                            bar_beta: float | None = None, delta: float | None = None,
                            regular: bool = True) -> BoundReport:
    """Evaluate the expression inside a big-O mixing or gap statement.

    Verdicts are ``not_applicable`` since the hidden constants are
    unspecified; the computed exponents are kept in ``details``.
    """
    if n < 2:
        raise InputsOutOfRegime("needs n >= 2")
    if which == "sw_mixing":
        if params is None or delta is None:
            raise InputsOutOfRegime("sw_mixing needs params and delta")
        if params.beta != params.gamma:
            raise InputsOutOfRegime("sw_mixing needs the Ising model")
        try:
            I_ent = sw_entropy_integral(params.beta, params.lam, Delta, delta)
        except (DeltaOutOfRange, LambdaTooLarge, InvalidParams) as exc:
            raise InputsOutOfRegime(str(exc)) from exc
        log_base = math.log(params.beta * Delta)
        value = _safe_exp(4 / delta**2 * log_base) * math.log(n)
        return not_applicable(which, value, entropy_integral=I_ent, log_value=4 / delta**2 * log_base
                              + math.log(math.log(n)), gap_order=_safe_exp(-2 / delta**2 * log_base))
    if params is None:
        raise InputsOutOfRegime(f"{which} needs params")
    _require_critical(params, Delta, regular)
    b, g, lam = params.beta, params.gamma, params.lam
    head = math.log(lam + 1 / lam)
    s = math.sqrt(b * g)
    if which == "glauber_critical":
        alpha = _alpha(b, g)
        expo = 2 * math.sqrt(2) + 4
        return not_applicable(which, (head + Delta * math.log(alpha)) * n**expo, alpha=alpha, exponent=expo)
    if which == "edge_field_mixing":
        if b <= 0:
            raise InputsOutOfRegime("needs beta > 0")
        c = 2 * Delta**2 * (1 - s) / ((Delta - 1) * s)
        pre = (head + Delta * math.log(2 + 1 / b)) * (b * g) ** (-Delta)
        return not_applicable(which, pre * math.exp(c) * n ** (c + 1), c=c, exponent=c + 1)
    if which == "glauber_via_edge":
        if bar_beta is None or not 0 < bar_beta < (Delta - 2) / Delta:
            raise InputsOutOfRegime("needs 0 < bar_beta < (Delta-2)/Delta")
        if not bar_beta <= s <= (Delta - 2) / Delta:
            raise InputsOutOfRegime("needs sqrt(beta gamma) in [bar_beta, (Delta-2)/Delta]")
        k, eps = edge_tilting_exponents(Delta, bar_beta)
        pre = (head + Delta * math.log(2 + 1 / b)) * (b * g) ** (-Delta)
        return not_applicable(which, pre * math.exp(2 * k + eps) * n ** (2 * k + 2 + eps), k=k, eps=eps,
                              exponent=2 * k + 2 + eps)
    if which == "glauber_via_vertex":
        if bar_beta is None or bar_beta > (Delta - 2.1) / Delta:
            raise InputsOutOfRegime("needs bar_beta <= (Delta-2.1)/Delta")
        if s > bar_beta:
            raise InputsOutOfRegime("needs sqrt(beta gamma) <= bar_beta")
        kappa = vertex_tilting_kappa(Delta, bar_beta)
        alpha = _alpha(b, g)
        return not_applicable(which, (head + Delta * math.log(alpha)) * n ** (2 * kappa + 2), kappa=kappa,
                              alpha=alpha, exponent=2 * kappa + 2)
    raise InputsOutOfRegime(f"unknown evaluator {which!r}")


def headline_exponent_check(Delta: int = 100, tol: float = 0.2) -> BoundReport:
    """Compare the two polynomial exponents at ``bar_beta = 1 - (1 + sqrt 2)/Delta``.

    Both should approach ``2 sqrt 2 + 4`` as ``Delta`` grows.
    """
    bar = 1 - (1 + math.sqrt(2)) / Delta
    if bar > (Delta - 2.1) / Delta:
        raise InputsOutOfRegime("Delta too small for the balancing choice of bar_beta")
    k, eps = edge_tilting_exponents(Delta, bar)
    edge_exp = 2 * k + 2 + eps
    vertex_exp = 2 * vertex_tilting_kappa(Delta, bar) + 2
    return compare("headline_exponent", tol, abs(edge_exp - vertex_exp), tol=0.0, edge_exponent=edge_exp,
                   vertex_exponent=vertex_exp, limit=2 * math.sqrt(2) + 4, bar_beta=bar)
