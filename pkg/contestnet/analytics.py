"""
Comparative statics and bipartite stability quantities.

The value functions h and f decide when the complete bipartite structure B(a, v) is
stable; the derivative helpers differentiate the reduced two-class equilibrium by the
implicit function theorem; sweep re-solves a scenario along a parameter grid.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from contestnet.config import settings
from contestnet.errors import BracketingError, ContestNetError, InvalidInputError
from contestnet.logger import get_logger
from contestnet.metrics import SWEEP_POINTS
from contestnet.model import (
    ContestParams,
    CostSpec,
    GameSpec,
    Structure,
    TechnologySpec,
    marginal_partials,
    marginal_revenue,
    pair_revenues,
)
from contestnet.scenario import Scenario
from contestnet.solver import (
    EquilibriumResult,
    anticipated_reply,
    optimal_row,
    solve_bipartite_reduced,
    solve_equilibrium,
)
from contestnet.stability import LfpsSearch, check_lfps

logger = get_logger(__name__)

SweepKind = Literal["r", "T", "cost_scale", "partition_v", "br_curve"]
SWEEP_KINDS = ("r", "T", "cost_scale", "partition_v", "br_curve")


def _identity_spec(r: float, cost: CostSpec) -> GameSpec:
    return GameSpec(TechnologySpec("linear", 1.0, 1.0), cost, ContestParams(r=r, T=1.0))


def h_maximizer(v: float, s: float, r: float, cost: CostSpec) -> float:
    """Effort per contest maximizing v (x - s)/(x + s + r) - c(v x)."""
    if v < 0 or s < 0 or r < 0:
        raise InvalidInputError(f"h needs v, s, r >= 0, got v={v}, s={s}, r={r}")
    if v == 0:
        return 0.0
    if s == 0 and r == 0:
        return settings.SINGULAR_EFFORT

    def foc(x: float) -> float:
        return (2.0 * s + r) / (x + s + r) ** 2 - float(cost.derivative(v * x))

    if foc(0.0) <= 0.0:
        return 0.0
    upper = max(s + r, 1.0)
    for _ in range(200):
        if foc(upper) < 0.0:
            break
        upper *= 2.0
    else:
        raise BracketingError("h maximizer could not be bracketed", foc(upper), 200)
    return brentq(foc, 0.0, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def deviation_value_h(v: float, s: float, r: float, cost: CostSpec) -> float:
    """
    h(v, s, r) = max_x v (x - s)/(x + s + r) - c(v x).

    Value of playing v identical contests against opponents each spending s, with the
    identity technology and a unit prize.
    """
    x = h_maximizer(v, s, r, cost)
    if v == 0:
        return 0.0
    if s == 0 and r == 0:
        return v - float(cost.value(v * x))
    return v * (x - s) / (x + s + r) - float(cost.value(v * x))


def attacker_link_benefit_f(a: float, v: float, r: float, cost: CostSpec) -> float:
    """
    f(a, v, r) = h(v - 1, s, r) - h(v, s, r), s the victim effort per contest in B(a, v).

    Negative exactly when no attacker wants to drop a victim.
    """
    if not (v >= 1 and a >= v):
        raise InvalidInputError(f"f needs a >= v >= 1, got a={a}, v={v}")
    _, victim = solve_bipartite_reduced(a, v, _identity_spec(r, cost))
    return deviation_value_h(v - 1, victim, r, cost) - deviation_value_h(v, victim, r, cost)


class ThresholdResult(BaseModel):
    n: int
    r: float
    v_star: Optional[float] = None
    bracketed: bool = False
    upper_bound: float
    max_stable_v: Optional[int] = None
    f_values: Dict[int, float] = Field(default_factory=dict)


def bipartite_threshold(n: int, r: float, cost: CostSpec, tol: Optional[float] = None) -> ThresholdResult:
    """
    Victim-class size below which B(n - v, v) is stable.

    v* is the sign change of f(n - v, v, r) on the continuous range [1, n/2 - n/(2 sqrt 5)];
    when f stays negative up to the bound, v_star is the bound and ``bracketed`` is False.
    f within tol of zero counts as unstable.
    """
    if n < 2:
        raise InvalidInputError(f"threshold needs n >= 2, got {n}")
    tol = settings.STABILITY_TOL if tol is None else tol
    upper = n / 2.0 - n / (2.0 * math.sqrt(5.0))
    f_values = {}
    max_stable = None
    for v in range(1, (n + 1) // 2):
        if n - v < v:
            break
        try:
            value = attacker_link_benefit_f(n - v, v, r, cost)
        except ContestNetError as e:
            logger.warning("threshold_point_failed", n=n, v=v, error=str(e))
            continue
        f_values[v] = value
        if value < -tol:
            max_stable = v

    def f_at(v: float) -> float:
        return attacker_link_benefit_f(n - v, v, r, cost)

    if n < 3 or upper < 1.0:
        # the relaxation range is empty; only v = 1 is evaluated
        first = f_values.get(1)
        if first is None or first >= -tol:
            return ThresholdResult(n=n, r=r, upper_bound=upper, max_stable_v=max_stable, f_values=f_values)
        return ThresholdResult(n=n, r=r, v_star=1.0, bracketed=False, upper_bound=upper,
                               max_stable_v=max_stable, f_values=f_values)
    low = f_at(1.0)
    if low >= -tol:
        return ThresholdResult(n=n, r=r, upper_bound=upper, max_stable_v=max_stable, f_values=f_values)
    high = f_at(upper)
    if high < 0.0:
        result = ThresholdResult(n=n, r=r, v_star=upper, bracketed=False, upper_bound=upper,
                                 max_stable_v=max_stable, f_values=f_values)
    else:
        v_star = brentq(f_at, 1.0, upper, xtol=1e-10)
        result = ThresholdResult(n=n, r=r, v_star=v_star, bracketed=True, upper_bound=upper,
                                 max_stable_v=max_stable, f_values=f_values)
    logger.debug("threshold_found", n=n, r=r, v_star=result.v_star, max_stable_v=max_stable)
    return result


class EffortDerivatives(BaseModel):
    parameter: Literal["r", "T"]
    attacker_effort: float
    victim_effort: float
    d_attacker: float
    d_victim: float
    d_total: float
    sign_predicate: Optional[bool] = None
    inequality: Optional[Tuple[float, float]] = None


def r_sign_inequality(a: float, v: float, alpha: float) -> Tuple[float, float]:
    """
    Both sides of the small-r condition deciding the sign of dw*/dr for phi(x) = x,
    c(x) = (2/alpha) x**alpha; total spending rises with r when lhs > rhs.
    """
    if alpha <= 1 or a <= 0 or v <= 0:
        raise InvalidInputError(f"inequality needs alpha > 1 and positive sizes, got {a}, {v}, {alpha}")
    e = (alpha - 1.0) / alpha
    lhs = (a ** (alpha - 1) - 3 * v ** (alpha - 1)) + (v / a) ** e * (v ** (alpha - 1) - 3 * a ** (alpha - 1))
    rhs = 2.0 / (alpha - 1.0) * (a**e + v**e) * v ** ((alpha - 1.0) ** 2 / alpha)
    return float(lhs), float(rhs)


def _bipartite_point(a: int, v: int, eq: Optional[EquilibriumResult], spec: GameSpec) -> Tuple[float, float]:
    if a < 1 or v < 1:
        raise InvalidInputError(f"class sizes must be >= 1, got a={a}, v={v}")
    if eq is None:
        eq = solve_equilibrium(Structure.bipartite(a, v), spec)
    if eq.structure.n != a + v:
        raise InvalidInputError(f"equilibrium has {eq.structure.n} players, B({a},{v}) has {a + v}")
    x, y = float(eq.profile.efforts[0, a]), float(eq.profile.efforts[a, 0])
    if not (x > 0.0 and y > 0.0):
        raise InvalidInputError("comparative statics need an interior equilibrium")
    return x, y


def _reduced_jacobian(a: int, v: int, x: float, y: float, spec: GameSpec) -> np.ndarray:
    own_x, opp_x = marginal_partials(x, y, spec)
    own_y, opp_y = marginal_partials(y, x, spec)
    return np.array([
        [float(own_x) - v * float(spec.cost.second_derivative(v * x)), float(opp_x)],
        [float(opp_y), float(own_y) - a * float(spec.cost.second_derivative(a * y))],
    ])


def effort_derivatives_r(
    a: int, v: int, eq: Optional[EquilibriumResult], spec: GameSpec
) -> EffortDerivatives:
    """
    Derivatives of the attacker and victim per-contest efforts and of w* in r on B(a, v).

    For phi(x) = x and the benchmark cost at r = 0 the small-r sign condition is evaluated too.
    """
    x, y = _bipartite_point(a, v, eq, spec)
    tech = spec.technology
    k = float(tech.value(x) + tech.value(y)) + spec.r
    dF = np.array([
        spec.T * float(tech.derivative(x)) * (float(tech.value(x)) - 3 * float(tech.value(y)) - spec.r) / k**3,
        spec.T * float(tech.derivative(y)) * (float(tech.value(y)) - 3 * float(tech.value(x)) - spec.r) / k**3,
    ])
    dx, dy = np.linalg.solve(_reduced_jacobian(a, v, x, y, spec), -dF)
    predicate, inequality = None, None
    cost = spec.cost
    if (
        tech.is_linear and tech.scale == 1.0 and spec.r == 0.0
        and cost.k1 == 0.0 and math.isclose(cost.k2, 2.0 / cost.alpha)
    ):
        inequality = r_sign_inequality(a, v, cost.alpha)
        predicate = inequality[0] > inequality[1]
    return EffortDerivatives(
        parameter="r",
        attacker_effort=x,
        victim_effort=y,
        d_attacker=float(dx),
        d_victim=float(dy),
        d_total=float(a * v * (dx + dy)),
        sign_predicate=predicate,
        inequality=inequality,
    )


def effort_derivatives_T(
    a: int, v: int, eq: Optional[EquilibriumResult], spec: GameSpec
) -> EffortDerivatives:
    x, y = _bipartite_point(a, v, eq, spec)
    dF = np.array([float(marginal_revenue(x, y, spec)), float(marginal_revenue(y, x, spec))]) / spec.T
    dx, dy = np.linalg.solve(_reduced_jacobian(a, v, x, y, spec), -dF)
    return EffortDerivatives(
        parameter="T",
        attacker_effort=x,
        victim_effort=y,
        d_attacker=float(dx),
        d_victim=float(dy),
        d_total=float(a * v * (dx + dy)),
    )


class ShockDerivatives(BaseModel):
    role: Literal["attacker", "victim"]
    shocked_player: int
    d_shocked: float
    d_same: Optional[float] = None
    d_other: float
    d_total: float

    @property
    def signs(self) -> Tuple[int, Optional[int], int]:
        same = None if self.d_same is None else int(np.sign(self.d_same))
        return int(np.sign(self.d_shocked)), same, int(np.sign(self.d_other))


def cost_shock_derivatives(
    a: int,
    v: int,
    role: str,
    spec: GameSpec,
    eq: Optional[EquilibriumResult] = None,
) -> ShockDerivatives:
    """
    Totals' response to scaling one player's marginal cost by 1 + eps, at eps = 0, on B(a, v).

    With linear technology every contest satisfies s_pq = 2T m_q/(m_p + m_q)^2 - r/(2 lambda),
    m_p = (1 + eps_p) c'(w_p); differentiating the three class-level totals (shocked player,
    its classmates, the other class) gives a 3x3 linear system.
    """
    if role not in ("attacker", "victim"):
        raise InvalidInputError(f"role must be 'attacker' or 'victim', got {role!r}")
    if not spec.technology.is_linear:
        raise InvalidInputError("cost-shock derivatives need a linear technology")
    if a < 1 or v < 1:
        raise InvalidInputError(f"class sizes must be >= 1, got a={a}, v={v}")
    if eq is None:
        eq = solve_equilibrium(Structure.bipartite(a, v), spec)
    w = eq.totals
    shocked = 0 if role == "attacker" else a
    size_same, size_other = (a, v) if role == "attacker" else (v, a)
    w_k = float(w[shocked])
    w_o = float(w[a if role == "attacker" else 0])
    w_s = w_k
    cost, T = spec.cost, spec.T
    m_k, m_s, m_o = (float(cost.derivative(t)) for t in (w_k, w_s, w_o))
    c2_k, c2_s, c2_o = (float(cost.second_derivative(t)) for t in (w_k, w_s, w_o))

    def dg_own(mp: float, mq: float) -> float:
        return -4.0 * T * mq / (mp + mq) ** 3

    def dg_opp(mp: float, mq: float) -> float:
        return 2.0 * T * (mp - mq) / (mp + mq) ** 3

    jac = np.eye(3)
    rhs = np.zeros(3)
    jac[0, 0] -= size_other * dg_own(m_k, m_o) * c2_k
    jac[0, 2] = -size_other * dg_opp(m_k, m_o) * c2_o
    rhs[0] = size_other * dg_own(m_k, m_o) * m_k
    if size_same > 1:
        jac[1, 1] -= size_other * dg_own(m_s, m_o) * c2_s
        jac[1, 2] = -size_other * dg_opp(m_s, m_o) * c2_o
        jac[2, 1] = -(size_same - 1) * dg_opp(m_o, m_s) * c2_s
    jac[2, 2] -= ((size_same - 1) * dg_own(m_o, m_s) + dg_own(m_o, m_k)) * c2_o
    jac[2, 0] = -dg_opp(m_o, m_k) * c2_k
    rhs[2] = dg_opp(m_o, m_k) * m_k
    d_k, d_s, d_o = np.linalg.solve(jac, rhs)
    total = d_k + (size_same - 1) * d_s + size_other * d_o
    return ShockDerivatives(
        role=role,
        shocked_player=shocked,
        d_shocked=float(d_k),
        d_same=float(d_s) if size_same > 1 else None,
        d_other=float(d_o),
        d_total=float(total),
    )


class SweepRecord(BaseModel):
    index: int
    value: float
    w_star: Optional[float] = None
    totals: List[float] = Field(default_factory=list)
    payoffs: List[float] = Field(default_factory=list)
    efforts: List[List[float]] = Field(default_factory=list)
    extra: Dict[str, Optional[float]] = Field(default_factory=dict)
    error: Optional[str] = None


class SweepTable(BaseModel):
    parameter: SweepKind
    grid: List[float]
    records: List[SweepRecord]

    def rows(self) -> List[Dict[str, Any]]:
        """Flat rows for CSV: grid value, w*, the kind-specific columns and the error."""
        extra_keys = sorted({key for record in self.records for key in record.extra})
        return [
            {
                self.parameter: record.value,
                "w_star": record.w_star,
                **{key: record.extra.get(key) for key in extra_keys},
                "error": record.error,
            }
            for record in self.records
        ]


def _check_grid(grid: Sequence[float]) -> List[float]:
    values = [float(x) for x in grid]
    if not values:
        raise InvalidInputError("sweep grid is empty")
    if not all(math.isfinite(x) for x in values):
        raise InvalidInputError("sweep grid has non-finite values")
    steps = np.diff(values)
    if len(values) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise InvalidInputError("sweep grid must be strictly monotone")
    return values


def _base_record(index: int, value: float, eq: EquilibriumResult) -> SweepRecord:
    return SweepRecord(
        index=index,
        value=value,
        w_star=eq.w_star,
        totals=eq.totals.tolist(),
        payoffs=eq.payoffs.tolist(),
        efforts=eq.profile.to_list(),
    )


def _parameter_point(kind: str, index: int, value: float, g: Structure, spec: GameSpec) -> SweepRecord:
    if kind == "r":
        spec = spec.with_params(r=value)
    elif kind == "T":
        spec = spec.with_params(T=value)
    else:
        spec = spec.with_cost(spec.cost.scaled(value))
    eq = solve_equilibrium(g, spec)
    record = _base_record(index, value, eq)
    if g.edges:
        i, j = g.sorted_edges[0]
        record.extra["pair_spending"] = float(eq.profile.efforts[i, j] + eq.profile.efforts[j, i])
    if kind == "r" and g.partition_sizes is not None and len(g.partition_sizes) == 2:
        a, v = g.partition_sizes
        try:
            record.extra["dw_dr"] = effort_derivatives_r(a, v, eq, spec).d_total
        except InvalidInputError:
            record.extra["dw_dr"] = None
    return record


def _partition_point(index: int, value: float, n: int, spec: GameSpec) -> SweepRecord:
    v = int(value)
    if v != value or not 1 <= v < n:
        raise InvalidInputError(f"victim class size must be an integer in 1..{n - 1}, got {value}")
    a = n - v
    eq = solve_equilibrium(Structure.bipartite(a, v), spec)
    record = _base_record(index, value, eq)
    # attacker 0 drops its contest with victim a and re-optimizes against the rest
    opp = eq.profile.efforts[a + 1:, 0]
    row = optimal_row(opp, np.ones(opp.size), spec) if opp.size else np.zeros(0)
    deviation = float(np.sum(pair_revenues(row, opp, spec))) - float(spec.cost.value(row.sum()))
    attacker = float(eq.payoffs[0])
    record.extra.update(attacker_payoff=attacker, deviation_payoff=deviation, deviation_gain=deviation - attacker)
    return record


def _reply_point(index: int, value: float, eq: EquilibriumResult, pair: Tuple[int, int]) -> SweepRecord:
    if value < 0:
        raise InvalidInputError(f"opposing effort must be >= 0, got {value}")
    i, j = pair
    s, spec = eq.profile.efforts, eq.spec
    record = _base_record(index, value, eq)
    record.extra["reply_i"] = anticipated_reply(value, float(s[i].sum() - s[i, j]), spec)
    record.extra["reply_j"] = anticipated_reply(value, float(s[j].sum() - s[j, i]), spec)
    return record


def sweep(
    kind: str,
    grid: Sequence[float],
    scenario: Scenario,
    pair: Optional[Tuple[int, int]] = None,
    threads: Optional[int] = None,
) -> SweepTable:
    """
    Re-solve the scenario at every grid value.

    Kinds:
        r, T, cost_scale: vary the draw term, the prize or a common cost scale
        partition_v: B(n - v, v) for each victim size v, with the attacker's payoff from dropping one victim
        br_curve: both players' anticipated replies on one linked pair as the opposing effort varies

    A point whose solve fails keeps its ``error`` and the sweep continues.
    """
    if kind not in SWEEP_KINDS:
        raise InvalidInputError(f"unknown sweep kind {kind!r}; expected one of {', '.join(SWEEP_KINDS)}")
    values = _check_grid(grid)
    spec = scenario.game_spec()
    g = scenario.structure()
    threads = settings.THREADS if threads is None else threads

    base_eq = None
    if kind == "br_curve":
        if not g.edges:
            raise InvalidInputError("br_curve needs a structure with at least one edge")
        pair = tuple(pair) if pair is not None else g.sorted_edges[0]
        if not g.has_edge(*pair):
            raise InvalidInputError(f"pair {pair} is not an edge of the scenario structure")
        base_eq = solve_equilibrium(g, spec)

    def point(item: Tuple[int, float]) -> SweepRecord:
        index, value = item
        try:
            if kind == "partition_v":
                record = _partition_point(index, value, g.n, spec)
            elif kind == "br_curve":
                record = _reply_point(index, value, base_eq, pair)
            else:
                record = _parameter_point(kind, index, value, g, spec)
        except ContestNetError as e:
            SWEEP_POINTS.labels(kind=kind, status="error").inc()
            logger.warning("sweep_point_failed", kind=kind, value=value, error=str(e))
            return SweepRecord(index=index, value=value, error=str(e))
        SWEEP_POINTS.labels(kind=kind, status="ok").inc()
        return record

    items = list(enumerate(values))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            records = list(executor.map(point, items))
    else:
        records = [point(item) for item in items]
    records.sort(key=lambda record: record.index)
    logger.info("sweep_finished", kind=kind, points=len(records),
                failed=sum(record.error is not None for record in records))
    return SweepTable(parameter=kind, grid=values, records=records)


class TripartiteRecord(BaseModel):
    sizes: Tuple[int, int, int]
    verdict: str
    certificate_kind: Optional[str] = None


def tripartite_search(n_max: int, spec: GameSpec, search: Optional[LfpsSearch] = None) -> List[TripartiteRecord]:
    """LFPS verdict for every complete tripartite structure with sizes m1 > m2 > m3 >= 1 and n <= n_max."""
    if n_max < 6:
        raise InvalidInputError(f"strictly decreasing tripartite sizes need n >= 6, got n_max={n_max}")
    out = []
    for n in range(6, n_max + 1):
        for m3 in range(1, n):
            for m2 in range(m3 + 1, n):
                m1 = n - m2 - m3
                if m1 <= m2:
                    continue
                report = check_lfps(Structure.complete_multipartite((m1, m2, m3)), spec, search)
                kind = report.certificate.kind if report.certificate else None
                out.append(TripartiteRecord(sizes=(m1, m2, m3), verdict=report.verdict, certificate_kind=kind))
                logger.info("tripartite_checked", sizes=[m1, m2, m3], verdict=report.verdict)
    return out
