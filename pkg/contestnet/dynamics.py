"""
Dynamic processes around the contest game.

- the action-adjustment flow ds/dt = J(s), projected onto nonnegative efforts
- sequential pair-revision network formation, re-equilibrating after every revision
- farsightedly improving paths over every structure of a tiny population
"""
import itertools
import json
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from contestnet.config import settings
from contestnet.errors import ContestNetError, ConvergenceError, InvalidInputError
from contestnet.logger import get_logger
from contestnet.model import Edge, GameSpec, StrategyProfile, Structure
from contestnet.solver import EffortSystem, EquilibriumResult, solve_equilibrium
from contestnet.stability import DeviationSearch, LfpsSearch, bilateral_violation
from contestnet.tracing import get_tracer

logger = get_logger(__name__)

FARSIGHTED_MAX_PLAYERS = 4
_GROWTH = 1.5
_MAX_STEP_FACTOR = 1e3
_MIN_STEP_FACTOR = 1e-14


@dataclass(frozen=True)
class FlowResult:
    x: np.ndarray
    steps: int
    time: float
    norms: Tuple[float, ...]


def _projected_field(system: EffortSystem, x: np.ndarray) -> np.ndarray:
    field_ = system.field(x)
    return np.where((x <= system.lower_bound) & (field_ < 0.0), 0.0, field_)


def _flow(
    system: EffortSystem,
    x0: np.ndarray,
    step: float,
    horizon: Optional[float],
    tol: float,
    strict: bool,
) -> FlowResult:
    lb = system.lower_bound
    x = np.maximum(np.asarray(x0, dtype=float), lb)
    direction = _projected_field(system, x)
    norm = float(np.linalg.norm(direction))
    norms = [norm]
    h, elapsed = step, 0.0
    for count in range(settings.FLOW_MAX_STEPS):
        if float(np.max(np.abs(direction), initial=0.0)) <= tol:
            return FlowResult(x, count, elapsed, tuple(norms))
        if horizon is not None and elapsed >= horizon:
            return FlowResult(x, count, elapsed, tuple(norms))
        if horizon is not None:
            h = min(h, horizon - elapsed)
        while True:
            with np.errstate(all="ignore"):
                x_new = np.maximum(x + h * direction, lb)
                direction_new = _projected_field(system, x_new)
                norm_new = float(np.linalg.norm(direction_new))
            if math.isfinite(norm_new) and norm_new < norm:
                break
            h /= 2.0
            if h < _MIN_STEP_FACTOR * step:
                raise ConvergenceError(
                    "gradient flow step underflowed", float(np.max(np.abs(direction))), count
                )
        x, direction, norm = x_new, direction_new, norm_new
        elapsed += h
        norms.append(norm)
        h = min(h * _GROWTH, _MAX_STEP_FACTOR * step)
    best = float(np.max(np.abs(direction), initial=0.0))
    if strict and best > tol:
        raise ConvergenceError("gradient flow exceeded its step budget", best, settings.FLOW_MAX_STEPS)
    return FlowResult(x, settings.FLOW_MAX_STEPS, elapsed, tuple(norms))


def integrate_system(
    system: EffortSystem,
    x0: np.ndarray,
    step: float = 0.05,
    horizon: Optional[float] = None,
    tol: Optional[float] = None,
) -> Tuple[np.ndarray, int]:
    """
    Explicit Euler on the projected flow of an EffortSystem.

    A step is accepted only when the norm of the projected field strictly decreases;
    otherwise it is halved. Accepted steps grow the next one by half.

    Raises:
        ConvergenceError: the step underflowed or the budget ran out before tol
    """
    tol = settings.SOLVER_TOL if tol is None else tol
    result = _flow(system, x0, step, horizon, tol, strict=horizon is None)
    return result.x, result.steps


class AdjustmentPath(BaseModel):
    """Endpoint of the action-adjustment flow and the norm of J at every accepted step."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    profile: StrategyProfile
    gradient_norms: List[float]
    steps: int
    time: float

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.gradient_norms, self.gradient_norms[1:]))


def adjustment_path(
    s0: StrategyProfile,
    g: Structure,
    spec: GameSpec,
    step: float = 0.05,
    horizon: Optional[float] = None,
    tol: Optional[float] = None,
) -> AdjustmentPath:
    if s0.n != g.n:
        raise InvalidInputError(f"profile has {s0.n} players, structure has {g.n}")
    off_mask = s0.efforts[~g.adjacency]
    if off_mask.size and float(off_mask.max()) > 0.0:
        raise InvalidInputError("initial profile places effort outside the structure's edges")
    if not (math.isfinite(step) and step > 0):
        raise InvalidInputError(f"step must be positive, got {step!r}")
    if not g.edges:
        return AdjustmentPath(profile=s0, gradient_norms=[0.0], steps=0, time=0.0)
    tol = settings.SOLVER_TOL if tol is None else tol
    system = EffortSystem.from_structure(g, spec)
    x0 = system.from_matrix(s0.efforts)
    start = _projected_field(system, x0)
    unclipped = np.array_equal(x0, s0.efforts[system.owner, system.target])
    if unclipped and float(np.max(np.abs(start))) <= tol:
        return AdjustmentPath(profile=s0, gradient_norms=[float(np.linalg.norm(start))], steps=0, time=0.0)
    result = _flow(system, x0, step, horizon, tol, strict=horizon is None)
    logger.debug("adjustment_integrated", steps=result.steps, time=result.time, final_norm=result.norms[-1])
    return AdjustmentPath(
        profile=StrategyProfile(system.to_matrix(result.x)),
        gradient_norms=list(result.norms),
        steps=result.steps,
        time=result.time,
    )


def integrate_adjustment(
    s0: StrategyProfile,
    g: Structure,
    spec: GameSpec,
    step: float = 0.05,
    horizon: Optional[float] = None,
    tol: Optional[float] = None,
) -> StrategyProfile:
    """Endpoint of ds/dt = J(s) from s0 on the edges of g."""
    return adjustment_path(s0, g, spec, step, horizon, tol).profile


class PeriodRecord(BaseModel):
    period: int
    phase: Literal["initial", "random", "settle"]
    pair: Optional[Tuple[int, int]] = None
    event: Literal["none", "delete", "add"] = "none"
    mover: Optional[int] = None
    removed: List[Tuple[int, int]] = Field(default_factory=list)
    added: List[Tuple[int, int]] = Field(default_factory=list)
    edges: List[Tuple[int, int]]
    totals: List[float]
    residual: float


class Trajectory(BaseModel):
    records: List[PeriodRecord] = Field(default_factory=list)
    status: Literal["settled", "budget-exhausted", "cycle", "aborted"] = "settled"
    seed: Optional[int] = None
    error: Optional[str] = None

    @property
    def final_edges(self) -> List[Tuple[int, int]]:
        return self.records[-1].edges if self.records else []

    def to_jsonl(self) -> str:
        lines = [record.model_dump_json() for record in self.records]
        lines.append(json.dumps({"status": self.status, "seed": self.seed, "error": self.error}))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Revision:
    event: str
    mover: Optional[int]
    removed: Tuple[Edge, ...]
    added: Tuple[Edge, ...]

    def apply(self, g: Structure) -> Structure:
        return g.without_edges(self.removed).with_edges(self.added)


def _edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


def _deletion(searcher: DeviationSearch, i: int, j: int) -> Optional[Revision]:
    """Plain deletion of ij if it pays, otherwise deletion with redirected contests."""
    if not searcher.g.has_edge(i, j):
        return None
    if bilateral_violation(searcher, i, j, rewire=False) is not None:
        return Revision("delete", None, (_edge(i, j),), ())
    found = bilateral_violation(searcher, i, j)
    if found is None:
        return None
    new_i, new_j = found
    added = sorted({_edge(i, t) for t in new_i} | {_edge(j, t) for t in new_j})
    return Revision("delete", None, (_edge(i, j),), tuple(added))


def _addition(searcher: DeviationSearch, i: int, j: int) -> Optional[Revision]:
    """i's most profitable new contests that include one against j."""
    if searcher.g.has_edge(i, j):
        return None
    keep = sorted(searcher.g.neighbors(i))
    best, best_set = searcher.base[i] + searcher.search.tol, None
    for candidate in searcher.candidate_sets(i, required=j):
        value = searcher.best_value(i, keep, candidate)
        if value > best:
            best, best_set = value, candidate
    if best_set is None:
        return None
    return Revision("add", i, (), tuple(sorted(_edge(i, t) for t in best_set)))


def _pair_revision(searcher: DeviationSearch, i: int, j: int) -> Optional[Revision]:
    return _deletion(searcher, i, j) or _addition(searcher, i, j) or _addition(searcher, j, i)


def _record(period: int, phase: str, eq: EquilibriumResult, pair=None, revision: Optional[Revision] = None):
    return PeriodRecord(
        period=period,
        phase=phase,
        pair=pair,
        event=revision.event if revision else "none",
        mover=revision.mover if revision else None,
        removed=list(revision.removed) if revision else [],
        added=list(revision.added) if revision else [],
        edges=eq.structure.sorted_edges,
        totals=[float(w) for w in eq.totals],
        residual=eq.residual,
    )


def settle_budget(n: int) -> int:
    """Revisions the settle phase may fire before giving up."""
    return 10 * n**2


def simulate_formation(
    g0: Structure,
    spec: GameSpec,
    periods: int,
    seed: Optional[int] = None,
    search: Optional[LfpsSearch] = None,
) -> Trajectory:
    """
    Sequential pair revisions followed by a deterministic settle phase.

    Each random period draws an unordered pair. A linked pair drops its link when that is
    bilaterally profitable, trying the plain deletion before deletions where both redirect
    effort to new targets; an unlinked pair lets either player open new contests that include
    one against the other. The equilibrium is recomputed after every revision.
    The settle phase sweeps deletions over linked pairs, then additions over unlinked pairs,
    restarting after any revision, until a full sweep fires nothing (settled), a structure recurs (cycle) or
    settle_budget(n) revisions ran (budget-exhausted).
    """
    if periods < 1:
        raise InvalidInputError(f"periods must be >= 1, got {periods}")
    if g0.n < 2:
        raise InvalidInputError("formation needs at least two players")
    search = search or LfpsSearch(threads=1)
    rng = np.random.default_rng(seed)
    trajectory = Trajectory(seed=seed)
    tracer = get_tracer()

    with tracer.start_as_current_span("simulate_formation") as span:
        span.set_attribute("contestnet.players", g0.n)
        span.set_attribute("contestnet.periods", periods)
        try:
            eq = solve_equilibrium(g0, spec)
            searcher = DeviationSearch(eq, search)
            trajectory.records.append(_record(0, "initial", eq))

            for period in range(1, periods + 1):
                i, j = sorted(int(p) for p in rng.choice(g0.n, size=2, replace=False))
                revision = _pair_revision(searcher, i, j)
                if revision is not None:
                    eq = solve_equilibrium(revision.apply(eq.structure), spec)
                    searcher = DeviationSearch(eq, search)
                trajectory.records.append(_record(period, "random", eq, (i, j), revision))

            budget = settle_budget(g0.n)
            fired, period = 0, periods
            seen = {eq.structure}
            pairs = [(i, j) for i in range(g0.n) for j in range(i + 1, g0.n)]
            while True:
                revision, pair = None, None
                for i, j in pairs:
                    revision = _deletion(searcher, i, j)
                    if revision is not None:
                        pair = (i, j)
                        break
                if revision is None:
                    for i, j in pairs:
                        revision = _addition(searcher, i, j) or _addition(searcher, j, i)
                        if revision is not None:
                            pair = (i, j)
                            break
                if revision is None:
                    trajectory.status = "settled"
                    break
                if fired >= budget:
                    trajectory.status = "budget-exhausted"
                    break
                fired += 1
                period += 1
                eq = solve_equilibrium(revision.apply(eq.structure), spec)
                searcher = DeviationSearch(eq, search)
                trajectory.records.append(_record(period, "settle", eq, pair, revision))
                if eq.structure in seen:
                    # settle sweeps are deterministic, so a revisited structure repeats forever
                    trajectory.status = "cycle"
                    break
                seen.add(eq.structure)
        except ContestNetError as e:
            logger.warning("formation_aborted", error=str(e), periods_recorded=len(trajectory.records))
            trajectory.status = "aborted"
            trajectory.error = str(e)
        span.set_attribute("contestnet.status", trajectory.status)

    logger.info(
        "formation_finished",
        status=trajectory.status,
        periods=len(trajectory.records),
        final_edges=len(trajectory.final_edges),
    )
    return trajectory


def canonical_form(g: Structure) -> Tuple[Edge, ...]:
    """Lexicographically smallest sorted edge tuple over all relabellings."""
    if g.n > FARSIGHTED_MAX_PLAYERS:
        raise InvalidInputError(f"canonical labelling is limited to {FARSIGHTED_MAX_PLAYERS} players")
    best = None
    for perm in itertools.permutations(range(g.n)):
        relabelled = tuple(sorted(_edge(perm[i], perm[j]) for i, j in g.edges))
        if best is None or relabelled < best:
            best = relabelled
    return best if best is not None else ()


class FarsightedClass(BaseModel):
    edges: List[Tuple[int, int]]
    payoffs: List[float]
    labelled_members: int


class FarsightedResult(BaseModel):
    n: int
    structures_examined: int
    stable: List[FarsightedClass]

    def stable_edge_sets(self) -> List[Tuple[Tuple[int, int], ...]]:
        return [tuple(tuple(e) for e in c.edges) for c in self.stable]


def _subsets(items: Sequence[int]):
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


def _moves(g: Structure) -> List[Tuple[Structure, int, int]]:
    """(successor, first mover, second mover) pairs; a unilateral move repeats its mover."""
    out = []
    for i in range(g.n):
        pool = sorted(g.non_neighbors(i))
        for added in _subsets(pool):
            if added:
                out.append((g.with_edges([(i, t) for t in added]), i, i))
    for i, j in g.sorted_edges:
        base = g.without_edges([(i, j)])
        pool_i = sorted(g.non_neighbors(i))
        pool_j = sorted(g.non_neighbors(j))
        for add_i in _subsets(pool_i):
            for add_j in _subsets(pool_j):
                edges = [(i, t) for t in add_i] + [(j, t) for t in add_j]
                out.append((base.with_edges(edges), i, j))
    return out


def farsighted_stable_set(n: int, spec: GameSpec, tol: Optional[float] = None) -> FarsightedResult:
    """
    Structures on n <= 4 players with no farsightedly improving path leaving them.

    A path step is either one player's multi-link addition or the deletion of a link together
    with additions by its two ends. Movers compare their payoff at the path's end with their
    payoff where they move: a unilateral mover gains strictly, the two movers of a deletion
    both weakly with at least one strict gain.
    """
    if not 2 <= n <= FARSIGHTED_MAX_PLAYERS:
        raise InvalidInputError(f"farsighted analysis supports 2..{FARSIGHTED_MAX_PLAYERS} players, got {n}")
    tol = settings.STABILITY_TOL if tol is None else tol
    all_edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    graphs = [Structure(n, frozenset(sub)) for sub in _subsets(all_edges)]
    index = {g: k for k, g in enumerate(graphs)}
    payoff_table = np.array([solve_equilibrium(g, spec).payoffs for g in graphs])

    src, dst, first, second = [], [], [], []
    for k, g in enumerate(graphs):
        for successor, p, q in _moves(g):
            src.append(k)
            dst.append(index[successor])
            first.append(p)
            second.append(q)
    src, dst, first, second = map(np.asarray, (src, dst, first, second))

    reaches_somewhere = np.zeros(len(graphs), dtype=bool)
    for end in range(len(graphs)):
        gain_p = payoff_table[end, first] - payoff_table[src, first]
        gain_q = payoff_table[end, second] - payoff_table[src, second]
        valid = (gain_p >= -tol) & (gain_q >= -tol) & ((gain_p > tol) | (gain_q > tol))
        moves = nx.DiGraph()
        moves.add_nodes_from(range(len(graphs)))
        moves.add_edges_from(zip(src[valid].tolist(), dst[valid].tolist()))
        for origin in nx.ancestors(moves, end):
            reaches_somewhere[origin] = True

    classes: Dict[Tuple[Edge, ...], int] = {}
    for k, g in enumerate(graphs):
        if not reaches_somewhere[k]:
            key = canonical_form(g)
            classes[key] = classes.get(key, 0) + 1
    stable = [
        FarsightedClass(
            edges=list(key),
            payoffs=[float(p) for p in payoff_table[index[Structure(n, frozenset(key))]]],
            labelled_members=count,
        )
        for key, count in sorted(classes.items(), key=lambda item: (len(item[0]), item[0]))
    ]
    logger.info("farsighted_enumerated", players=n, structures=len(graphs), stable_classes=len(stable))
    return FarsightedResult(n=n, structures_examined=len(graphs), stable=stable)
