"""Tree recursions, uniqueness, critical fields and the control function.

The map ``f_d(x) = lam * ((beta*x + 1) / (x + gamma))**d`` drives
everything here. Its fixed point ``x_hat`` and the slack
``1 - |f_d'(x_hat)|`` decide uniqueness; the same ingredients build the
control function certifying total-influence bounds on trees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BarBetaTooLarge,
    DeltaOutOfRange,
    NegativeArgument,
    NoCriticalPoint,
    NotAntiferromagnetic,
    NotCritical,
    RootPinned,
    ThetaOutOfRange,
    ZeroSlack,
)
from .graph_core import Graph, PinnedTree, saw_tree
from .spin_model import Pinning, SpinParams, flip

CRITICAL_TOL = 1e-9


def ratio_factor(params: SpinParams, x):
    """``(beta*x + 1) / (x + gamma)`` with the limit ``beta`` at ``x = inf``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (params.beta * x + 1) / (x + params.gamma)
    return np.where(np.isinf(x), params.beta, out)


def psi(params: SpinParams, x):
    """Edge influence ``(1 - beta*gamma) x / ((beta*x + 1)(x + gamma))``; zero at 0 and inf."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (1 - params.beta * params.gamma) * x / ((params.beta * x + 1) * (x + params.gamma))
    return np.where(np.isinf(x), 0.0, out)


def tree_ratio_recursion(params: SpinParams, child_ratios) -> float:
    """Marginal ratio at a vertex from the ratios of its children (0 / inf mean pinned 0 / 1)."""
    r = np.asarray(list(child_ratios), dtype=float)
    if np.any(r < 0):
        raise NegativeArgument("ratios must be non-negative")
    return float(params.lam * np.prod(ratio_factor(params, r)))


# uniqueness -----------------------------------------------------------------

@dataclass(frozen=True)
class UniquenessReport:
    d: int
    x_hat: float
    slack: float
    classification: str


def _bisect_decreasing(fn: Callable[[float], float], lo: float, hi: float) -> float:
    # root of a decreasing function with fn(lo) >= 0 >= fn(hi), to machine precision
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fixed_point(params: SpinParams, d: int) -> float:
    b, g, lam = params.beta, params.gamma, params.lam
    hi = max(lam * g ** (-d), 1.0) * (1 + 1e-6)
    return _bisect_decreasing(lambda x: lam * ((b * x + 1) / (x + g)) ** d - x, 0.0, hi)


def slack_at(params: SpinParams, d: int, x: float) -> float:
    b, g = params.beta, params.gamma
    return 1 - d * (1 - b * g) * x / ((b * x + 1) * (x + g))


def uniqueness(params: SpinParams, d: int, tol: float = CRITICAL_TOL) -> UniquenessReport:
    """Fixed point of ``f_d`` and the slack ``1 - |f_d'(x_hat)|``."""
    if not params.antiferromagnetic:
        raise NotAntiferromagnetic("uniqueness analysis needs beta*gamma < 1")
    if params.lam <= 0:
        raise NotAntiferromagnetic("uniqueness analysis needs lambda > 0")
    if d < 1:
        raise ValueError("d must be at least 1")
    x = fixed_point(params, d)
    s = slack_at(params, d, x)
    cls = "critical" if abs(s) <= tol else ("unique_with_slack" if s > 0 else "non_unique")
    return UniquenessReport(d, x, s, cls)


def critical_lambda(beta: float, gamma: float, d: int) -> tuple[float, float]:
    """``(lambda_c, x_c)`` with ``x_c`` the smaller root of ``d(1 - beta*gamma)x = (beta*x + 1)(x + gamma)``."""
    if beta * gamma >= 1:
        raise NotAntiferromagnetic("critical field needs beta*gamma < 1")
    # beta x^2 + b x + gamma = 0
    b = 1 + beta * gamma - d * (1 - beta * gamma)
    if b >= 0:
        raise NoCriticalPoint("uniqueness holds for every field")
    if beta == 0:
        x = gamma / (-b)
    else:
        disc = b * b - 4 * beta * gamma
        if disc < 0:
            if disc > -1e-14 * b * b:
                disc = 0.0
            else:
                raise NoCriticalPoint("uniqueness holds for every field")
        x = 2 * gamma / (-b + math.sqrt(disc))
    return x * ((x + gamma) / (beta * x + 1)) ** d, x


def lambda_for_slack(beta: float, gamma: float, d: int, slack: float) -> float:
    """Field at which ``(beta, gamma, lam)`` is ``d``-unique with exact ``slack``, on the subcritical branch."""
    if not 0 < slack < 1:
        raise DeltaOutOfRange("target slack must lie in (0, 1)")
    lam_c, _ = critical_lambda(beta, gamma, d)
    lo, hi = -60.0, math.log(lam_c)

    def excess(t):
        return uniqueness(SpinParams(beta, gamma, math.exp(t)), d).slack - slack

    return math.exp(_bisect_decreasing(excess, lo, hi))


def tilted_slack_lower_bound(params: SpinParams, d: int, theta: float, tol: float = 1e-6) -> float:
    """Guaranteed slack after multiplying both edge activities of a critical system by ``theta``."""
    s = math.sqrt(params.beta * params.gamma)
    if s >= 1:
        raise NotAntiferromagnetic("needs beta*gamma < 1")
    top = math.inf if s == 0 else 1 / s
    if not 1 <= theta <= top * (1 + 1e-12):
        raise ThetaOutOfRange(f"theta must lie in [1, {top}]")
    if abs(uniqueness(params, d).slack) > tol:
        raise NotCritical("parameters are not critical at this branching number")
    return (theta - 1) * s / (1 - s)


# control function -----------------------------------------------------------

@dataclass
class ControlFunction:
    """Piecewise control function for degree bound ``Delta`` (branching ``D = Delta - 1``).

    Equal to ``1/delta`` up to the fixed point, then
    ``1 + (D/delta) psi(f^{-1}(x))`` up to ``lam * gamma**-D``, then zero.
    """

    params: SpinParams
    Delta: int
    delta: float
    x_hat: float
    flipped: bool = False
    inverse_tol: float = 1e-13
    x_c: float | None = None
    lambda_c: float | None = None

    @property
    def D(self) -> int:
        return self.Delta - 1

    @property
    def top(self) -> float:
        return self.params.lam * self.params.gamma ** (-self.D)

    def f(self, x):
        return self.params.lam * ratio_factor(self.params, x) ** self.D

    def psi(self, x):
        return psi(self.params, x)

    def f_inverse(self, y):
        """Solve ``f(t) = y`` for ``t`` in ``[0, x_hat]`` by vectorised bisection."""
        y = np.asarray(y, dtype=float)
        lo = np.zeros_like(y)
        hi = np.full_like(y, self.x_hat)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = self.f(mid) > y
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= self.inverse_tol * np.maximum(hi, 1e-300)):
                break
        return 0.5 * (lo + hi)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise NegativeArgument("control function is defined on [0, inf]")
        out = np.zeros_like(x)
        low = x <= self.x_hat
        out[low] = 1 / self.delta
        mid = (~low) & (x <= self.top * (1 + 1e-12))
        if np.any(mid):
            out[mid] = 1 + self.D / self.delta * self.psi(self.f_inverse(np.minimum(x[mid], self.top)))
        return out


def build_control_function(params: SpinParams, Delta: int, auto_flip: bool = True) -> ControlFunction:
    """Control function for ``params``, flipping spins first when ``lam > (gamma/beta)**(Delta/2)``."""
    if Delta < 2:
        raise ValueError("Delta must be at least 2")
    flipped = False
    if auto_flip and params.beta > 0 and params.lam > (params.gamma / params.beta) ** (Delta / 2):
        params = flip(params)
        flipped = True
    rep = uniqueness(params, Delta - 1)
    if rep.slack <= 1e-12:
        raise ZeroSlack(f"exact slack {rep.slack} is not positive")
    cf = ControlFunction(params, Delta, rep.slack, rep.x_hat, flipped)
    try:
        cf.lambda_c, cf.x_c = critical_lambda(params.beta, params.gamma, Delta - 1)
    except NoCriticalPoint:
        pass
    return cf


def control_xi(cf: ControlFunction, x) -> float:
    return float(cf(np.asarray([x], dtype=float))[0])


@dataclass(frozen=True)
class ControlReport:
    trials: int
    worst_functional_violation: float
    worst_product_violation: float
    max_xi_psi: float
    product_bound: float
    flipped: bool
    passed: bool
    tol: float = 1e-9

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sample_arguments(rng: np.random.Generator, shape, x_hat: float) -> np.ndarray:
    x = np.exp(rng.uniform(math.log(1e-6), math.log(1e6), size=shape))
    atom = rng.random(shape)
    x = np.where(atom < 0.05, 0.0, x)
    x = np.where((atom >= 0.05) & (atom < 0.1), np.inf, x)
    # points near the fixed point, where the inequality is tight
    near = (atom >= 0.1) & (atom < 0.25)
    x = np.where(near, x_hat * np.exp(rng.normal(0, 0.05, size=shape)), x)
    return x


def verify_control_function(cf: ControlFunction, trials: int = 100000, seed: int = 0,
                            tol: float = 1e-9, chunk: int = 20000) -> ControlReport:
    """Monte Carlo check of the functional inequality and of ``Xi * psi <= (1-delta)/(delta*D)``.

    Violations are measured relative to ``max(1, rhs)``.
    """
    prm = cf.params
    D = cf.D
    rng = np.random.default_rng(seed)
    all_d = max(prm.beta, prm.gamma) <= 1
    worst = -math.inf
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        d = rng.integers(0, D + 1, size=k) if all_d else np.full(k, D)
        x = _sample_arguments(rng, (k, D), cf.x_hat)
        active = np.arange(D)[None, :] < d[:, None]
        fac = np.where(active, ratio_factor(prm, x), 1.0)
        y = prm.lam * np.prod(fac, axis=1)
        lhs = cf(y)
        contrib = np.where(active, cf.psi(x) * cf(x.ravel()).reshape(x.shape), 0.0)
        rhs = 1 + contrib.sum(axis=1)
        worst = max(worst, float(np.max((rhs - lhs) / np.maximum(1.0, rhs))))
        done += k
    grid = np.concatenate([
        np.geomspace(1e-8, 1e8, 20001),
        cf.x_hat * np.linspace(0.9, 1.1, 2001),
        [cf.x_hat, cf.top, 0.0, np.inf],
    ])
    xi_psi = cf(grid) * cf.psi(grid)
    bound = (1 - cf.delta) / (cf.delta * D)
    max_xp = float(np.max(xi_psi))
    prod_violation = (max_xp - bound) / max(1.0, bound)
    return ControlReport(trials, worst, prod_violation, max_xp, bound, cf.flipped,
                         bool(worst <= tol and prod_violation <= tol), tol)


# total influence on trees ---------------------------------------------------

def _postorder(tree: PinnedTree) -> list[int]:
    children = tree.children()
    order, stack = [], [tree.root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(children[v])
    return order[::-1]


def ti_recursion(tree: PinnedTree, params: SpinParams) -> tuple[float, float]:
    """``(TI_root, R_root)`` by the bottom-up ratio and total-influence recursions."""
    if tree.root in tree.pinning:
        raise RootPinned("root of the tree is pinned")
    children = tree.children()
    R = np.zeros(tree.tree.n)
    TI = np.zeros(tree.tree.n)
    for v in _postorder(tree):
        if v in tree.pinning:
            R[v] = math.inf if tree.pinning[v] == 1 else 0.0
            TI[v] = 1.0
            continue
        ch = children[v]
        rc = R[ch]
        R[v] = params.lam * float(np.prod(ratio_factor(params, rc)))
        TI[v] = 1.0 + float(np.sum(np.abs(psi(params, rc)) * TI[ch]))
    return float(TI[tree.root]), float(R[tree.root])


def tree_from_graph(g: Graph, root: int, pinning: dict | None = None) -> PinnedTree:
    """Pinned tree view of a graph that is already a tree."""
    if g.num_edges != g.n - 1:
        raise ValueError("graph is not a tree")
    return saw_tree(g, root, pinning)


def saw_si_bound(g: Graph, params: SpinParams, pin: Pinning | None = None) -> float:
    """Largest tree total influence over free roots, minus one."""
    if not params.antiferromagnetic:
        raise NotAntiferromagnetic("SAW bound is for antiferromagnetic systems")
    fixed = (pin or Pinning()).vertex_constraints()
    best = 0.0
    for r in range(g.n):
        if r in fixed:
            continue
        ti, _ = ti_recursion(saw_tree(g, r, fixed), params)
        best = max(best, ti - 1)
    return best


def si_ci_formula_bounds(delta: float, Delta: int) -> tuple[float, float]:
    """Spectral and coupling independence bounds for degree ``Delta`` and slack ``delta``."""
    if not (1e-12 <= delta <= 1):
        raise DeltaOutOfRange("slack must lie in (0, 1]")
    if Delta < 2:
        raise ValueError("Delta must be at least 2")
    si = Delta * (1 - delta) / ((Delta - 1) * delta)
    return si, 1 + si


# vertex tilting -------------------------------------------------------------

@dataclass
class VertexTiltingReport:
    kappa: float
    x_c: float
    lambda_c: float
    lower: float
    middle_closed: float
    middle_at_xc: float
    chain_holds: bool
    lambda_of_x: Callable[[float], float] = field(repr=False)
    delta_of_x: Callable[[float], float] = field(repr=False)

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if not callable(v)}


def vertex_tilting_quantities(beta: float, gamma: float, Delta: int, bar_beta: float) -> VertexTiltingReport:
    """Exponent ``kappa`` and the comparison chain ``Delta/(Delta-2) <= ... <= kappa <= 10``."""
    if Delta < 3:
        raise ValueError("Delta must be at least 3")
    if bar_beta > (Delta - 2.1) / Delta:
        raise BarBetaTooLarge(f"bar_beta must be at most {(Delta - 2.1) / Delta}")
    D = Delta - 1
    bc = (Delta - 2) / Delta
    bg = beta * gamma
    kappa = math.sqrt((1 - bar_beta**2) / (bc**2 - bar_beta**2))
    lam_c, x_c = critical_lambda(beta, gamma, D)
    middle_closed = math.sqrt((1 - bg) / (bc**2 - bg))
    middle_at_xc = Delta * (1 - bg) * x_c / (gamma - beta * x_c**2)
    lower = Delta / (Delta - 2)
    slack = 1e-12 * max(1.0, kappa)
    holds = lower <= middle_closed + slack and middle_closed <= kappa + slack and kappa <= 10 + slack

    def lam_x(x):
        return x * ((x + gamma) / (beta * x + 1)) ** D

    def delta_x(x):
        return 1 - D * (1 - bg) * x / ((beta * x + 1) * (x + gamma))

    return VertexTiltingReport(kappa, x_c, lam_c, lower, middle_closed, middle_at_xc, holds, lam_x, delta_x)
