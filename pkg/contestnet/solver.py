"""
Equilibrium computation for the contest game on a fixed structure.

Every method works on an EffortSystem: a flat vector of directed effort variables, either one
per directed edge (the full game) or one per ordered class pair (complete multipartite
structures, where all members of a class play alike). The KKT conditions are checked with
the natural residual x - max(lb, x + F(x)), F being the payoff gradient.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from contestnet.config import settings
from contestnet.errors import BracketingError, ConvergenceError, InvalidInputError
from contestnet.logger import get_logger
from contestnet.metrics import timed_solve
from contestnet.model import (
    CostSpec,
    Edge,
    GameSpec,
    StrategyProfile,
    Structure,
    marginal_partials,
    marginal_revenue,
    payoffs,
)
from contestnet.tracing import get_tracer

logger = get_logger(__name__)

METHODS = ("newton", "best_response", "gradient_flow", "auto")
_BRACKET_DOUBLINGS = 200
_TINY = 1e-300
_WARM_START_SWEEPS = 5


@dataclass(frozen=True, eq=False)
class EffortSystem:
    """
    Directed effort variables of a contest game.

    Variable e is one contest effort of ``owner[e]`` against ``target[e]``; ``reverse[e]`` is the
    opposing variable and ``weight[e]`` the number of such contests in the owner's total.
    """

    owner: np.ndarray
    target: np.ndarray
    reverse: np.ndarray
    weight: np.ndarray
    n_owners: int
    spec: GameSpec
    multiplier: np.ndarray
    class_of: Optional[Tuple[int, ...]] = None
    by_class: bool = False

    @classmethod
    def from_structure(
        cls,
        g: Structure,
        spec: GameSpec,
        cost_shock: Optional[Tuple[int, float]] = None,
    ) -> "EffortSystem":
        pairs = sorted([(i, j) for i, j in g.edges] + [(j, i) for i, j in g.edges])
        index = {pair: e for e, pair in enumerate(pairs)}
        multiplier = np.ones(g.n)
        if cost_shock is not None:
            multiplier[cost_shock[0]] = 1.0 + cost_shock[1]
        return cls(
            owner=np.array([p[0] for p in pairs], dtype=int),
            target=np.array([p[1] for p in pairs], dtype=int),
            reverse=np.array([index[(j, i)] for i, j in pairs], dtype=int),
            weight=np.ones(len(pairs)),
            n_owners=g.n,
            spec=spec,
            multiplier=multiplier,
        )

    @classmethod
    def from_partition(cls, sizes: Sequence[float], spec: GameSpec) -> "EffortSystem":
        """Class-pair variables; sizes may be real-valued (continuous relaxations)."""
        sizes = [float(m) for m in sizes]
        pairs = [(k, l) for k in range(len(sizes)) for l in range(len(sizes)) if k != l]
        index = {pair: e for e, pair in enumerate(pairs)}
        class_of = None
        if all(m == int(m) for m in sizes):
            class_of = tuple(k for k, m in enumerate(sizes) for _ in range(int(m)))
        return cls(
            owner=np.array([p[0] for p in pairs], dtype=int),
            target=np.array([p[1] for p in pairs], dtype=int),
            reverse=np.array([index[(l, k)] for k, l in pairs], dtype=int),
            weight=np.array([sizes[l] for _, l in pairs]),
            n_owners=len(sizes),
            spec=spec,
            multiplier=np.ones(len(sizes)),
            class_of=class_of,
            by_class=True,
        )

    @property
    def size(self) -> int:
        return self.owner.size

    @property
    def lower_bound(self) -> float:
        # with r = 0 the origin of a contest is singular and never an equilibrium
        return 0.0 if self.spec.r > 0 else settings.SINGULAR_EFFORT

    @cached_property
    def rows(self) -> List[np.ndarray]:
        return [np.flatnonzero(self.owner == o) for o in range(self.n_owners)]

    def variable(self, owner: int, target: int) -> int:
        hits = np.flatnonzero((self.owner == owner) & (self.target == target))
        if hits.size == 0:
            raise InvalidInputError(f"no effort variable for ({owner}, {target})")
        return int(hits[0])

    def totals(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(self.owner, weights=self.weight * x, minlength=self.n_owners)

    def field(self, x: np.ndarray) -> np.ndarray:
        slope = self.multiplier * np.asarray(self.spec.cost.derivative(self.totals(x)))
        return np.asarray(marginal_revenue(x, x[self.reverse], self.spec)) - slope[self.owner]

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        own, opp = marginal_partials(x, x[self.reverse], self.spec)
        curvature = self.multiplier * np.asarray(self.spec.cost.second_derivative(self.totals(x)))
        same_owner = self.owner[:, None] == self.owner[None, :]
        jac = -curvature[self.owner][:, None] * same_owner * self.weight[None, :]
        idx = np.arange(self.size)
        jac[idx, idx] += own
        jac[idx, self.reverse] += opp
        return jac

    def natural_residual(self, x: np.ndarray, field_: Optional[np.ndarray] = None) -> np.ndarray:
        field_ = self.field(x) if field_ is None else field_
        return x - np.maximum(self.lower_bound, x + field_)

    def residual_norm(self, x: np.ndarray) -> float:
        res = self.natural_residual(x)
        return float(np.max(np.abs(res))) if res.size else 0.0

    def initial_point(self, seed: Optional[int] = None) -> np.ndarray:
        load = np.bincount(self.owner, weights=self.weight, minlength=self.n_owners)
        x = 0.5 / np.sqrt(np.maximum(load[self.owner], 1.0))
        if seed is not None:
            rng = np.random.default_rng(seed)
            x = x * rng.uniform(0.25, 2.0, size=x.size)
        return np.maximum(x, self.lower_bound)

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        if self.by_class and self.class_of is None:
            raise InvalidInputError("real-valued class sizes have no player matrix")
        if not self.by_class:
            efforts = np.zeros((self.n_owners, self.n_owners))
            efforts[self.owner, self.target] = x
            return efforts
        per_class = np.zeros((self.n_owners, self.n_owners))
        per_class[self.owner, self.target] = x
        members = np.array(self.class_of)
        return per_class[members][:, members]

    def from_matrix(self, efforts: np.ndarray) -> np.ndarray:
        if self.by_class:
            raise InvalidInputError("class-pair systems cannot be loaded from a player matrix")
        return np.maximum(efforts[self.owner, self.target], self.lower_bound)


def _reply_efforts(opp: np.ndarray, level: float, spec: GameSpec) -> np.ndarray:
    """
    Efforts whose marginal revenue against each opposing effort equals ``level``.

    Zero where the marginal at 0 is already below the level; against an idle opponent with
    r = 0 any stake wins, and the smallest configured stake is used.
    """
    opp = np.asarray(opp, dtype=float)
    out = np.zeros_like(opp)
    if opp.size == 0:
        return out
    singular = (opp == 0.0) & (spec.r == 0.0)
    out[singular] = settings.SINGULAR_EFFORT
    live = ~singular
    if not live.any():
        return out
    if level <= 0.0:
        raise BracketingError("marginal cost is zero; the reply is unbounded")
    tech = spec.technology
    b = opp[live]
    if tech.is_linear:
        lam = tech.scale
        phi_b = lam * b
        reach = np.sqrt(spec.T * lam * (spec.r + 2.0 * phi_b) / level)
        out[live] = np.maximum(reach - spec.r - phi_b, 0.0) / lam
        return out
    m0 = np.asarray(marginal_revenue(np.zeros_like(b), b, spec))
    active = m0 > level
    x = np.zeros_like(b)
    if active.any():
        bb = b[active]
        lo = np.full(bb.shape, _TINY)
        hi = np.maximum(bb, 1.0)
        for _ in range(_BRACKET_DOUBLINGS):
            above = np.asarray(marginal_revenue(hi, bb, spec)) > level
            if not above.any():
                break
            lo = np.where(above, hi, lo)
            hi = np.where(above, 2.0 * hi, hi)
        else:
            raise BracketingError("could not bracket the reply effort")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = np.asarray(marginal_revenue(mid, bb, spec)) > level
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-16 * np.maximum(hi, 1e-300)):
                break
        x[active] = 0.5 * (lo + hi)
    out[live] = x
    return out


def optimal_row(
    opp: Sequence[float],
    weights: Sequence[float],
    spec: GameSpec,
    multiplier: float = 1.0,
) -> np.ndarray:
    """
    Maximize sum_j weights_j * R(x_j, opp_j) - c(sum_j weights_j * x_j) over x >= 0.

    The objective is concave and separable given the total W, so the optimum is found by
    solving W = sum_j weights_j * x_j(c'(W)) for the unique total.
    """
    opp = np.asarray(opp, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if opp.size == 0:
        return np.zeros(0)
    cost = spec.cost

    def slope(total: float) -> float:
        return multiplier * float(cost.derivative(total))

    def row_at(total: float) -> np.ndarray:
        return _reply_efforts(opp, slope(total), spec)

    def excess(total: float) -> float:
        return total - float(np.dot(weights, row_at(total)))

    lo: Optional[float] = None
    if slope(0.0) > 0.0:
        base = row_at(0.0)
        if not np.any(base > 0.0):
            return base
        lo = 0.0
    hi = 1.0
    for _ in range(_BRACKET_DOUBLINGS):
        if excess(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise BracketingError("could not bracket the optimal total effort")
    if lo is None:
        lo = hi / 2.0
        while excess(lo) >= 0.0:
            lo /= 2.0
            if lo < _TINY:
                raise BracketingError("could not bracket the optimal total effort from below")
    if excess(hi) == 0.0:
        return row_at(hi)
    total = brentq(excess, lo, hi, xtol=1e-15, maxiter=500)
    return row_at(total)


def best_response_row(
    i: int,
    s: StrategyProfile,
    g: Structure,
    spec: GameSpec,
    tol: Optional[float] = None,
) -> np.ndarray:
    """Player i's optimal row on g's edge mask with every other entry held fixed."""
    if not 0 <= i < s.n:
        raise InvalidInputError(f"player index {i} out of range 0..{s.n - 1}")
    targets = sorted(g.neighbors(i))
    row = np.zeros(s.n)
    if targets:
        row[targets] = optimal_row(s.efforts[targets, i], np.ones(len(targets)), spec)
    return row


def anticipated_reply(s_attack: float, w_defender: float, spec: GameSpec) -> float:
    """
    One-shot best reply of a newly attacked player who keeps its other efforts.

    Solves (r + 2 phi(s)) phi'(y) / (r + phi(s) + phi(y))**2 = c'(w + y) for y, or returns 0
    when the marginal at 0 does not beat c'(w).

    Raises:
        BracketingError: no sign change could be found
    """
    if not (math.isfinite(s_attack) and s_attack >= 0) or not (math.isfinite(w_defender) and w_defender >= 0):
        raise InvalidInputError("anticipated_reply needs finite nonnegative efforts")
    if s_attack == 0.0 and spec.r == 0.0:
        return 0.0
    cost = spec.cost
    m0 = float(marginal_revenue(0.0, s_attack, spec))
    if m0 <= float(cost.derivative(w_defender)):
        return 0.0

    def gap(y: float) -> float:
        return float(marginal_revenue(y, s_attack, spec)) - float(cost.derivative(w_defender + y))

    lo = 0.0 if math.isfinite(m0) else _TINY
    hi = max(1.0, s_attack)
    for _ in range(_BRACKET_DOUBLINGS):
        if gap(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise BracketingError("could not bracket the anticipated reply")
    root = brentq(gap, lo, hi, xtol=settings.REPLY_XTOL, maxiter=500)
    for _ in range(3):
        own, _ = marginal_partials(root, s_attack, spec)
        slope = float(own) - float(cost.second_derivative(w_defender + root))
        if not math.isfinite(slope) or slope >= 0.0:
            break
        candidate = root - gap(root) / slope
        if not lo <= candidate <= hi or abs(gap(candidate)) >= abs(gap(root)):
            break
        root = candidate
    return root


def anticipated_reply_slope(s_attack: float, w_defender: float, spec: GameSpec) -> Tuple[float, float]:
    """The anticipated reply and its derivative in the attacking effort (0 on the idle branch)."""
    reply = anticipated_reply(s_attack, w_defender, spec)
    if reply <= 0.0:
        return reply, 0.0
    own, cross = marginal_partials(reply, s_attack, spec)
    denom = float(own) - float(spec.cost.second_derivative(w_defender + reply))
    if denom == 0.0 or not math.isfinite(denom):
        return reply, 0.0
    return reply, -float(cross) / denom


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    profile: StrategyProfile
    structure: Structure
    spec: GameSpec
    residual: float
    iterations: int
    method: str
    reduced: bool = False
    cost_shock: Optional[Tuple[int, float]] = None

    @property
    def totals(self) -> np.ndarray:
        return self.profile.totals

    @property
    def w_star(self) -> float:
        return float(self.totals.sum())

    @cached_property
    def payoffs(self) -> np.ndarray:
        return payoffs(self.profile, self.spec)

    @cached_property
    def interior(self) -> Dict[Edge, bool]:
        s = self.profile.efforts
        return {(i, j): bool(s[i, j] > 0.0 and s[j, i] > 0.0) for i, j in self.structure.sorted_edges}

    @property
    def is_interior(self) -> bool:
        return all(self.interior.values())


def kkt_residual(
    s: StrategyProfile,
    g: Structure,
    spec: GameSpec,
    cost_shock: Optional[Tuple[int, float]] = None,
) -> float:
    """Largest natural-map residual on g's edges, or the largest effort placed off them."""
    off_mask = s.efforts[~g.adjacency]
    off = float(off_mask.max()) if off_mask.size else 0.0
    if not g.edges:
        return off
    system = EffortSystem.from_structure(g, spec, cost_shock)
    x = s.efforts[system.owner, system.target]
    field_ = system.field(np.maximum(x, system.lower_bound))
    res = x - np.maximum(system.lower_bound, x + field_)
    return max(off, float(np.max(np.abs(res))))


def _newton(system: EffortSystem, x0: np.ndarray, tol: float) -> Tuple[np.ndarray, int]:
    lb = system.lower_bound
    x = np.maximum(x0, lb)
    field_ = system.field(x)
    res = system.natural_residual(x, field_)
    norm = float(np.linalg.norm(res))
    for iteration in range(settings.NEWTON_MAX_ITER):
        if float(np.max(np.abs(res))) <= tol:
            return x, iteration
        free = ~((x <= lb) & (field_ <= 0.0))
        jac = system.jacobian(x)
        direction = np.zeros_like(x)
        try:
            direction[free] = np.linalg.solve(jac[np.ix_(free, free)], -field_[free])
        except np.linalg.LinAlgError:
            direction[free] = field_[free]
        if not np.all(np.isfinite(direction)):
            direction = np.where(free, field_, 0.0)

        accepted = False
        for candidate in (direction, field_ / (1.0 + float(np.max(np.abs(np.diag(jac)))))):
            step = 1.0
            for _ in range(settings.LINE_SEARCH_HALVINGS + 1):
                x_new = np.maximum(x + step * candidate, lb)
                field_new = system.field(x_new)
                res_new = system.natural_residual(x_new, field_new)
                norm_new = float(np.linalg.norm(res_new))
                if math.isfinite(norm_new) and norm_new < norm:
                    accepted = True
                    break
                step /= 2.0
            if accepted:
                break
        if not accepted:
            raise ConvergenceError("damped Newton stalled", float(np.max(np.abs(res))), iteration)
        x, field_, res, norm = x_new, field_new, res_new, norm_new
    best = float(np.max(np.abs(res)))
    if best <= tol:
        return x, settings.NEWTON_MAX_ITER
    raise ConvergenceError("damped Newton exceeded its iteration budget", best, settings.NEWTON_MAX_ITER)


def _best_response(
    system: EffortSystem,
    x0: np.ndarray,
    tol: float,
    max_sweeps: Optional[int] = None,
    strict: bool = True,
) -> Tuple[np.ndarray, int]:
    """Gauss-Seidel sweeps of exact row best responses, damped when progress stalls."""
    max_sweeps = settings.BR_MAX_SWEEPS if max_sweeps is None else max_sweeps
    lb = system.lower_bound
    x = np.maximum(x0, lb).copy()
    best = math.inf
    damping, stalled = 1.0, 0
    residual = system.residual_norm(x)
    for sweep in range(1, max_sweeps + 1):
        for owner, idx in enumerate(system.rows):
            if idx.size == 0:
                continue
            new = optimal_row(x[system.reverse[idx]], system.weight[idx], system.spec, system.multiplier[owner])
            x[idx] = np.maximum(x[idx] + damping * (new - x[idx]), lb)
        residual = system.residual_norm(x)
        if residual <= tol:
            return x, sweep
        if residual < best * (1.0 - 1e-3):
            best, stalled = residual, 0
        else:
            stalled += 1
            if stalled >= 50 and damping > 0.125:
                damping /= 2.0
                stalled = 0
                logger.debug("best_response_damped", damping=damping, residual=residual)
    if strict:
        raise ConvergenceError("best-response sweeps exceeded their budget", residual, max_sweeps)
    return x, max_sweeps


def _run_method(system: EffortSystem, method: str, tol: float, seed: Optional[int]) -> Tuple[np.ndarray, int, str]:
    x0 = system.initial_point(seed)
    if method == "newton":
        x, iterations = _newton(system, x0, tol)
        return x, iterations, "newton"
    if method == "best_response":
        x, iterations = _best_response(system, x0, tol)
        return x, iterations, "best_response"
    if method == "gradient_flow":
        from contestnet.dynamics import integrate_system

        x, iterations = integrate_system(system, x0, tol=tol)
        return x, iterations, "gradient_flow"

    warm, sweeps = _best_response(system, x0, tol, max_sweeps=_WARM_START_SWEEPS, strict=False)
    try:
        x, iterations = _newton(system, warm, tol)
        return x, sweeps + iterations, "newton"
    except ConvergenceError as e:
        logger.info("newton_fallback", best_residual=e.best_residual)
    try:
        x, iterations = _best_response(system, x0, tol)
        return x, iterations, "best_response"
    except ConvergenceError as e:
        logger.info("best_response_fallback", best_residual=e.best_residual)
    from contestnet.dynamics import integrate_system

    x, iterations = integrate_system(system, x0, tol=tol)
    return x, iterations, "gradient_flow"


def solve_equilibrium(
    g: Structure,
    spec: GameSpec,
    method: str = "auto",
    tol: Optional[float] = None,
    seed: Optional[int] = None,
    reduce: bool = True,
    cost_shock: Optional[Tuple[int, float]] = None,
) -> EquilibriumResult:
    """
    Solve the unique pure-strategy equilibrium of the contest game on g.

    Args:
        g: Structure of possible contests
        spec: Technology, cost and contest parameters
        method: newton, best_response, gradient_flow or auto
        tol: Bound on the KKT residual (defaults to settings.SOLVER_TOL)
        seed: Randomizes the starting point when given
        reduce: Solve complete multipartite inputs in class-pair variables
        cost_shock: Optional (player, epsilon) scaling that player's marginal cost by 1 + epsilon

    Returns:
        EquilibriumResult whose residual is certified on the full game

    Raises:
        InvalidInputError: unknown method, bad tolerance or bad shock
        ConvergenceError: no method reached the tolerance
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    tol = settings.SOLVER_TOL if tol is None else tol
    if not (math.isfinite(tol) and tol > 0):
        raise InvalidInputError(f"tolerance must be positive, got {tol!r}")
    if cost_shock is not None:
        k, eps = cost_shock
        if not 0 <= k < g.n or not (math.isfinite(eps) and eps > -1.0):
            raise InvalidInputError(f"cost shock {cost_shock!r} needs a valid player and epsilon > -1")

    if not g.edges:
        zero = StrategyProfile.zeros(g.n)
        return EquilibriumResult(zero, g, spec, residual=0.0, iterations=0, method=method, cost_shock=cost_shock)

    use_reduced = (
        reduce and g.partition_sizes is not None and cost_shock is None and method != "gradient_flow"
    )
    tracer = get_tracer()
    with tracer.start_as_current_span("solve_equilibrium") as span, timed_solve(method):
        span.set_attribute("contestnet.players", g.n)
        span.set_attribute("contestnet.edges", len(g.edges))
        span.set_attribute("contestnet.method", method)
        if use_reduced:
            system = EffortSystem.from_partition(g.partition_sizes, spec)
        else:
            system = EffortSystem.from_structure(g, spec, cost_shock)
        x, iterations, tag = _run_method(system, method, tol, seed)
        profile = StrategyProfile(system.to_matrix(x))
        residual = kkt_residual(profile, g, spec, cost_shock)
        if residual > tol and use_reduced:
            full = EffortSystem.from_structure(g, spec)
            x_full, extra = _newton(full, full.from_matrix(profile.efforts), tol)
            profile = StrategyProfile(full.to_matrix(x_full))
            residual = kkt_residual(profile, g, spec)
            iterations += extra
        if residual > tol:
            raise ConvergenceError(f"{tag} result misses the tolerance on the full game", residual, iterations)
        span.set_attribute("contestnet.residual", residual)

    logger.debug(
        "equilibrium_solved",
        players=g.n,
        edges=len(g.edges),
        method=tag,
        reduced=use_reduced,
        residual=residual,
        iterations=iterations,
    )
    return EquilibriumResult(
        profile=profile,
        structure=g,
        spec=spec,
        residual=residual,
        iterations=iterations,
        method=tag,
        reduced=use_reduced,
        cost_shock=cost_shock,
    )


def solve_bipartite_reduced(a: float, v: float, spec: GameSpec, tol: Optional[float] = None) -> Tuple[float, float]:
    """
    Per-contest efforts (attacker, victim) of B(a, v) for real-valued class sizes.

    Used by the continuous relaxation of the bipartite threshold.
    """
    if a <= 0 or v <= 0:
        raise InvalidInputError(f"class sizes must be positive, got a={a}, v={v}")
    tol = settings.SOLVER_TOL if tol is None else tol
    system = EffortSystem.from_partition((a, v), spec)
    x, _, _ = _run_method(system, "auto", tol, None)
    return float(x[system.variable(0, 1)]), float(x[system.variable(1, 0)])


def closed_form_bipartite(a: float, v: float, alpha: float) -> Tuple[float, float]:
    """
    Equilibrium efforts of B(a, v) for phi(x) = x, c(x) = (2/alpha) x**alpha and r = 0.

    Returns:
        (attacker effort per contest, victim effort per contest)
    """
    if alpha < 2:
        raise InvalidInputError(f"closed form needs alpha >= 2, got {alpha}")
    if a < 1 or v < 1:
        raise InvalidInputError(f"class sizes must be >= 1, got a={a}, v={v}")
    e = (alpha - 1.0) / alpha
    denom = (a**e + v**e) ** (2.0 / alpha)
    factor = (a * v) ** (-((alpha - 1.0) ** 2) / alpha**2)
    return a**e / denom * factor, v**e / denom * factor


def w_fixed_point(
    g: Structure,
    scale: float,
    cost: CostSpec,
    r: float,
    shock: Optional[Tuple[int, float]] = None,
    T: float = 1.0,
) -> np.ndarray:
    """
    Totals from the linear-technology identity
        w_i = sum_{j in N_i} 2 T m_j / (m_i + m_j)**2 - d_i r / (2 scale),
    with m_p = (1 + eps_p) c'(w_p).

    Plain iteration first; damped iteration when it fails to settle.

    Raises:
        InvalidInputError: the fixed point implies a negative contest effort
        ConvergenceError: no damping level converged
    """
    n = g.n
    totals = np.zeros(n)
    if not g.edges:
        return totals
    multiplier = np.ones(n)
    if shock is not None:
        multiplier[shock[0]] = 1.0 + shock[1]
    pairs = np.array(sorted([(i, j) for i, j in g.edges] + [(j, i) for i, j in g.edges]))
    src, dst = pairs[:, 0], pairs[:, 1]
    rho = r / (2.0 * scale)

    def efforts(w: np.ndarray) -> np.ndarray:
        m = multiplier * np.asarray(cost.derivative(w))
        return 2.0 * T * m[dst] / (m[src] + m[dst]) ** 2 - rho

    def image(w: np.ndarray) -> np.ndarray:
        return np.bincount(src, weights=efforts(w), minlength=n)

    w0 = 0.5 * np.sqrt(np.maximum(g.degrees, 0).astype(float))
    converged = False
    for damping in (1.0, 0.5, 0.25, 0.1, 0.05):
        w = w0.copy()
        with np.errstate(all="ignore"):
            for _ in range(5000):
                target = image(w)
                if not np.all(np.isfinite(target)):
                    break
                delta = float(np.max(np.abs(target - w)))
                w = np.maximum(w + damping * (target - w), 0.0)
                if delta <= 1e-14 * (1.0 + float(np.max(np.abs(w)))):
                    converged = True
                    break
        if converged:
            break
        logger.debug("fixed_point_damping_reduced", damping=damping)
    if not converged:
        raise ConvergenceError("total-effort fixed point did not converge", float("nan"), 5000)
    if np.any(efforts(w) <= 0.0):
        raise InvalidInputError("equilibrium is not interior; the total-effort identity does not apply")
    return w
