"""
Stability of contest networks.

Three notions are checked: Nash stability, strong pairwise stability, and limited-farsighted
pairwise stability (LFPS) where a player starting new contests anticipates each target's
one-shot reply. Every "unstable" verdict carries a DeviationCertificate that replays to the
recorded payoff changes.
"""
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import minimize

from contestnet.config import settings
from contestnet.errors import AmbiguousPartitionError, ContestNetError, InvalidInputError
from contestnet.logger import get_logger
from contestnet.metrics import DEVIATIONS
from contestnet.model import (
    Edge,
    GameSpec,
    StrategyProfile,
    Structure,
    induced_structure,
    marginal_revenue,
    pair_revenues,
    payoff,
    payoffs,
)
from contestnet.solver import EquilibriumResult, anticipated_reply_slope, optimal_row, solve_equilibrium

logger = get_logger(__name__)

Concept = Literal["nash", "strong_pairwise", "lfps"]
Verdict = Literal["stable", "unstable", "nonexistent-by-theory", "inconclusive"]
Role = Literal["attacker", "hybrid", "victim", "peer", "isolated"]


class ReplyRecord(BaseModel):
    attacker: int
    target: int
    effort: float


class DeviatorRecord(BaseModel):
    player: int
    row: List[float]
    added_links: List[int] = Field(default_factory=list)
    payoff_before: float
    payoff_after: float

    @property
    def gain(self) -> float:
        return self.payoff_after - self.payoff_before


class DeviationCertificate(BaseModel):
    kind: Literal["unilateral", "bilateral"]
    deviators: List[DeviatorRecord]
    links_removed: List[Tuple[int, int]] = Field(default_factory=list)
    replies: List[ReplyRecord] = Field(default_factory=list)
    note: str = ""


class NashPredicate(BaseModel):
    """Classifier of the idle-contest condition T*phi'(0)/r <= c'(0)."""

    ratio: Optional[float] = None
    ratio_infinite: bool = False
    marginal_cost_at_zero: float
    holds: bool
    nash_stable_structure: Literal["empty", "complete"]
    strong_pairwise: Literal["empty", "nonexistent-by-theory"]
    trivially_complete: bool = False


class StabilityReport(BaseModel):
    concept: Concept
    verdict: Verdict
    certificate: Optional[DeviationCertificate] = None
    search_family: Optional[str] = None
    predicate: Optional[NashPredicate] = None
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unstable_has_certificate(self) -> "StabilityReport":
        if self.verdict == "unstable" and self.certificate is None:
            raise ValueError("an unstable verdict needs a certificate")
        return self


def nash_predicate(spec: GameSpec) -> NashPredicate:
    slope = float(spec.cost.derivative(0.0))
    marginal = spec.T * spec.technology.marginal_at_zero
    ratio = math.inf if spec.r == 0.0 else marginal / spec.r
    holds = ratio <= slope
    return NashPredicate(
        ratio=None if math.isinf(ratio) else ratio,
        ratio_infinite=math.isinf(ratio),
        marginal_cost_at_zero=slope,
        holds=holds,
        nash_stable_structure="empty" if holds else "complete",
        strong_pairwise="empty" if holds else "nonexistent-by-theory",
        trivially_complete=spec.r == 0.0 and spec.cost.k1 == 0.0,
    )


def _deviation_profile(
    s_star: StrategyProfile,
    rows: Dict[int, Sequence[float]],
    replies: Sequence[ReplyRecord],
) -> StrategyProfile:
    efforts = s_star.efforts.copy()
    for player, row in rows.items():
        efforts[player] = np.asarray(row, dtype=float)
        efforts[player, player] = 0.0
    for reply in replies:
        efforts[reply.target, reply.attacker] = reply.effort
    return StrategyProfile(efforts)


def _certificate(
    kind: str,
    s_star: StrategyProfile,
    spec: GameSpec,
    rows: Dict[int, np.ndarray],
    added: Dict[int, Sequence[int]],
    replies: Sequence[ReplyRecord] = (),
    removed: Sequence[Edge] = (),
    note: str = "",
) -> DeviationCertificate:
    deviated = _deviation_profile(s_star, rows, replies)
    deviators = [
        DeviatorRecord(
            player=player,
            row=[float(x) for x in rows[player]],
            added_links=sorted(int(t) for t in added.get(player, ())),
            payoff_before=payoff(player, s_star, spec),
            payoff_after=payoff(player, deviated, spec),
        )
        for player in rows
    ]
    return DeviationCertificate(
        kind=kind,
        deviators=deviators,
        links_removed=[tuple(e) for e in removed],
        replies=list(replies),
        note=note,
    )


def replay_certificate(cert: DeviationCertificate, s_star: StrategyProfile, spec: GameSpec) -> Dict[int, float]:
    """Recompute each deviator's payoff change from the certificate alone."""
    deviated = _deviation_profile(s_star, {d.player: d.row for d in cert.deviators}, cert.replies)
    return {
        d.player: payoff(d.player, deviated, spec) - payoff(d.player, s_star, spec)
        for d in cert.deviators
    }


def check_nash(s: StrategyProfile, spec: GameSpec, tol: Optional[float] = None) -> StabilityReport:
    """
    Nash stability: no player gains by re-optimizing its row against every other player.

    The report also carries the analytic predicate on the primitives.
    """
    tol = settings.STABILITY_TOL if tol is None else tol
    predicate = nash_predicate(spec)
    notes = ["r = 0 and k1 = 0: the predicate is trivially 'complete'"] if predicate.trivially_complete else []
    base = payoffs(s, spec)
    DEVIATIONS.labels(concept="nash").inc(s.n)
    for i in range(s.n):
        targets = [j for j in range(s.n) if j != i]
        if not targets:
            break
        row = np.zeros(s.n)
        row[targets] = optimal_row(s.efforts[targets, i], np.ones(len(targets)), spec)
        gain = payoff(i, s.with_row(i, row), spec) - base[i]
        if gain > tol:
            added = [j for j in targets if row[j] > 0 and s.efforts[i, j] + s.efforts[j, i] == 0]
            cert = _certificate("unilateral", s, spec, {i: row}, {i: added}, note="full best response")
            logger.info("deviation_found", concept="nash", player=i, gain=gain)
            return StabilityReport(concept="nash", verdict="unstable", certificate=cert,
                                   predicate=predicate, notes=notes)
    return StabilityReport(concept="nash", verdict="stable", predicate=predicate, notes=notes)


def check_strong_pairwise(s: StrategyProfile, spec: GameSpec, tol: Optional[float] = None) -> StabilityReport:
    """
    Strong pairwise stability: Nash stable and no linked pair gains jointly by severing its link.

    The plain severance (every other effort kept) is tried first, then re-optimized rows.
    """
    tol = settings.STABILITY_TOL if tol is None else tol
    nash = check_nash(s, spec, tol)
    if nash.verdict != "stable":
        return StabilityReport(
            concept="strong_pairwise",
            verdict=nash.verdict,
            certificate=nash.certificate,
            predicate=nash.predicate,
            notes=nash.notes + ["fails the Nash prerequisite"],
        )
    g = induced_structure(s)
    if not g.edges:
        return StabilityReport(concept="strong_pairwise", verdict="stable", predicate=nash.predicate)
    base = payoffs(s, spec)
    DEVIATIONS.labels(concept="strong_pairwise").inc(2 * len(g.edges))

    for i, j in g.sorted_edges:
        rows = {i: s.efforts[i].copy(), j: s.efforts[j].copy()}
        rows[i][j] = 0.0
        rows[j][i] = 0.0
        deviated = _deviation_profile(s, rows, ())
        if payoff(i, deviated, spec) - base[i] > tol and payoff(j, deviated, spec) - base[j] > tol:
            cert = _certificate("bilateral", s, spec, rows, {}, removed=[(i, j)],
                                note="sever the link, keep every other effort")
            return StabilityReport(concept="strong_pairwise", verdict="unstable", certificate=cert,
                                   predicate=nash.predicate)

    for i, j in g.sorted_edges:
        rows = {}
        for p, q in ((i, j), (j, i)):
            keep = sorted(g.neighbors(p) - {q})
            row = np.zeros(s.n)
            if keep:
                row[keep] = optimal_row(s.efforts[keep, p], np.ones(len(keep)), spec)
            rows[p] = row
        deviated = _deviation_profile(s, rows, ())
        if payoff(i, deviated, spec) - base[i] > tol and payoff(j, deviated, spec) - base[j] > tol:
            cert = _certificate("bilateral", s, spec, rows, {}, removed=[(i, j)],
                                note="sever the link, re-optimize the remaining rows")
            return StabilityReport(concept="strong_pairwise", verdict="unstable", certificate=cert,
                                   predicate=nash.predicate)

    return StabilityReport(
        concept="strong_pairwise",
        verdict="nonexistent-by-theory",
        predicate=nash.predicate,
        notes=["no joint deviation found, but a nonempty strongly pairwise stable network cannot exist"],
    )


@dataclass(frozen=True)
class LfpsSearch:
    """Deviation family used by check_lfps; 'stable' verdicts are sound only for this family."""

    exhaustive_limit: int = field(default_factory=lambda: settings.LFPS_EXHAUSTIVE_LIMIT)
    tol: float = field(default_factory=lambda: settings.STABILITY_TOL)
    threads: int = field(default_factory=lambda: settings.THREADS)
    solver_method: str = "auto"

    def describe(self, largest_candidate_pool: int) -> str:
        if largest_candidate_pool <= self.exhaustive_limit:
            return f"exhaustive: every L_i subset of F_i (|F_i| <= {self.exhaustive_limit}), grouped by equal w*"
        return (
            f"mixed: exhaustive when |F_i| <= {self.exhaustive_limit}, otherwise the empty set plus "
            "greedy chains adding the weakest non-neighbours first"
        )


def _signature_key(x: float) -> float:
    return float(f"{x:.12g}")


class DeviationSearch:
    """
    Best deviation payoffs against a fixed equilibrium s*.

    A deviator keeps some of its current contests, may start contests against new targets
    (who reply with their anticipated best reply given their equilibrium totals), and
    re-optimizes its whole row.
    """

    def __init__(self, eq: EquilibriumResult, search: Optional[LfpsSearch] = None):
        self.eq = eq
        self.search = search or LfpsSearch()
        self.spec = eq.spec
        self.g = eq.structure
        self.s = eq.profile
        self.w = eq.totals
        self.base = eq.payoffs
        self._cache: Dict[tuple, float] = {}

    def candidate_sets(self, i: int, required: Optional[int] = None) -> List[Tuple[int, ...]]:
        """
        Candidate L_i sets, smallest first.

        With ``required`` every set contains that non-neighbour, starting with the singleton;
        the other members are drawn from the rest of the pool.
        """
        pool = sorted(self.g.non_neighbors(i) - {required})
        extra = () if required is None else (required,)
        if len(pool) <= self.search.exhaustive_limit:
            groups: Dict[float, List[int]] = {}
            for t in pool:
                groups.setdefault(_signature_key(self.w[t]), []).append(t)
            members = [groups[key] for key in sorted(groups)]
            sets = []
            for counts in itertools.product(*(range(len(m) + 1) for m in members)):
                chosen = [t for m, c in zip(members, counts) for t in m[:c]]
                sets.append(tuple(sorted(chosen + list(extra))))
            sets.sort(key=len)
            return sets
        weakest_first = sorted(pool, key=lambda t: (-self.w[t], t))
        return [tuple(sorted(weakest_first[:k] + list(extra))) for k in range(len(pool) + 1)]

    def _signature(self, i: int, keep: Sequence[int], new: Sequence[int]) -> tuple:
        return (
            tuple(sorted(_signature_key(self.s.efforts[k, i]) for k in keep)),
            tuple(sorted(_signature_key(self.w[t]) for t in new)),
        )

    def best_value(self, i: int, keep: Sequence[int], new: Sequence[int]) -> float:
        key = self._signature(i, keep, new)
        cached = self._cache.get(key)
        if cached is None:
            cached = self.best_deviation(i, keep, new)[0]
            self._cache[key] = cached
        return cached

    def best_deviation(
        self, i: int, keep: Sequence[int], new: Sequence[int]
    ) -> Tuple[float, np.ndarray, List[ReplyRecord]]:
        """Value, deviating row and anticipated replies of i's best deviation."""
        DEVIATIONS.labels(concept="lfps").inc()
        spec = self.spec
        keep, new = list(keep), list(new)
        opp = self.s.efforts[keep, i]
        row = np.zeros(self.s.n)
        if not new:
            if keep:
                row[keep] = optimal_row(opp, np.ones(len(keep)), spec)
            value = float(np.sum(pair_revenues(row[keep], opp, spec))) - float(spec.cost.value(row.sum()))
            return value, row, []

        n_keep = len(keep)
        w_new = self.w[new]

        def objective(x: np.ndarray) -> Tuple[float, np.ndarray]:
            xk, xn = x[:n_keep], x[n_keep:]
            total = float(x.sum())
            slope = float(spec.cost.derivative(total))
            value = float(np.sum(pair_revenues(xk, opp, spec))) - float(spec.cost.value(total))
            grad = np.empty_like(x)
            if n_keep:
                grad[:n_keep] = np.nan_to_num(np.asarray(marginal_revenue(xk, opp, spec)), nan=0.0, posinf=1e6) - slope
            for m, (effort, w_t) in enumerate(zip(xn, w_new)):
                reply, dreply = anticipated_reply_slope(float(effort), float(w_t), spec)
                value += float(pair_revenues(effort, reply, spec))
                own = float(np.nan_to_num(marginal_revenue(effort, reply, spec), nan=0.0, posinf=1e6))
                back = float(np.nan_to_num(marginal_revenue(reply, effort, spec), nan=0.0, posinf=1e6))
                grad[n_keep + m] = own - back * dreply - slope
            return -value, -grad

        floor = 0.0 if spec.r > 0 else 1e-9
        bounds = [(0.0, None)] * n_keep + [(floor, None)] * len(new)
        scale = float(np.mean(self.s.efforts[i, keep])) if keep else 0.5
        scale = scale if scale > 0 else 0.5
        current = self.s.efforts[i, keep] if keep else np.zeros(0)
        starts = [
            np.concatenate([current, np.full(len(new), scale)]),
            np.concatenate([current, np.full(len(new), 0.5 * scale)]),
            np.concatenate([0.5 * current, np.full(len(new), 2.0 * scale)]),
        ]
        best = None
        for x0 in starts:
            result = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                              options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-12})
            if best is None or result.fun < best.fun:
                best = result
        x = np.maximum(best.x, [b[0] for b in bounds])
        row[keep] = x[:n_keep]
        row[new] = x[n_keep:]
        replies = [
            ReplyRecord(attacker=i, target=int(t), effort=anticipated_reply_slope(float(row[t]), float(self.w[t]), spec)[0])
            for t in new
        ]
        return -float(best.fun), row, replies

    def best_over_family(self, i: int, keep: Sequence[int]) -> Tuple[float, Tuple[int, ...]]:
        best_value, best_set = -math.inf, ()
        for candidate in self.candidate_sets(i):
            value = self.best_value(i, keep, candidate)
            if value > best_value:
                best_value, best_set = value, candidate
        return best_value, best_set


def _map(threads: int, fn, items):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))


def _unilateral_certificate(search: DeviationSearch, i: int, new: Sequence[int]) -> DeviationCertificate:
    keep = sorted(search.g.neighbors(i))
    _, row, replies = search.best_deviation(i, keep, new)
    return _certificate("unilateral", search.s, search.spec, {i: row}, {i: list(new)}, replies,
                        note="start contests anticipating one-shot replies")


def _bilateral_certificate(
    search: DeviationSearch, i: int, j: int, new_i: Sequence[int], new_j: Sequence[int]
) -> DeviationCertificate:
    rows, replies = {}, []
    for p, q, new in ((i, j, new_i), (j, i, new_j)):
        keep = sorted(search.g.neighbors(p) - {q})
        _, row, reps = search.best_deviation(p, keep, new)
        row[q] = 0.0
        rows[p] = row
        replies.extend(reps)
    return _certificate("bilateral", search.s, search.spec, rows, {i: list(new_i), j: list(new_j)},
                        replies, removed=[(min(i, j), max(i, j))],
                        note="delete the link and rewire, replies computed independently")


def unilateral_violation(search: DeviationSearch, i: int) -> Optional[Tuple[int, ...]]:
    """First L_i whose deviation strictly beats s* for player i, if any."""
    keep = sorted(search.g.neighbors(i))
    for candidate in search.candidate_sets(i):
        if search.best_value(i, keep, candidate) > search.base[i] + search.search.tol:
            return candidate
    return None


def bilateral_violation(
    search: DeviationSearch, i: int, j: int, rewire: bool = True
) -> Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """
    (L_i, L_j) making the deletion of ij weakly better for both and strictly for one.

    With ``rewire`` False only the plain deletion (both L sets empty) is evaluated.
    """
    tol = search.search.tol
    keep_i = sorted(search.g.neighbors(i) - {j})
    keep_j = sorted(search.g.neighbors(j) - {i})
    if rewire:
        value_i, set_i = search.best_over_family(i, keep_i)
        value_j, set_j = search.best_over_family(j, keep_j)
    else:
        value_i, set_i = search.best_value(i, keep_i, ()), ()
        value_j, set_j = search.best_value(j, keep_j, ()), ()
    gain_i, gain_j = value_i - search.base[i], value_j - search.base[j]
    if gain_i >= -tol and gain_j >= -tol and max(gain_i, gain_j) > tol:
        return set_i, set_j
    return None


def check_lfps(
    g: Structure,
    spec: GameSpec,
    search: Optional[LfpsSearch] = None,
    eq: Optional[EquilibriumResult] = None,
) -> StabilityReport:
    """
    Limited-farsighted pairwise stability of g.

    Solves the equilibrium s* on g, then looks for a profitable unilateral deviation (U) and
    a bilateral deletion-plus-rewiring deviation (B) within the declared search family.
    """
    search = search or LfpsSearch()
    pool = max((len(g.non_neighbors(i)) for i in range(g.n)), default=0)
    family = search.describe(pool)
    try:
        if eq is None:
            eq = solve_equilibrium(g, spec, method=search.solver_method)
        searcher = DeviationSearch(eq, search)
        unilateral = _map(search.threads, lambda i: unilateral_violation(searcher, i), list(range(g.n)))
        for i, found in enumerate(unilateral):
            if found is not None:
                cert = _unilateral_certificate(searcher, i, found)
                if cert.deviators[0].gain > search.tol:
                    logger.info("deviation_found", concept="lfps", kind="unilateral", player=i, links=list(found))
                    return StabilityReport(concept="lfps", verdict="unstable", certificate=cert, search_family=family)
        edges = g.sorted_edges
        bilateral = _map(search.threads, lambda e: bilateral_violation(searcher, *e), edges)
        for (i, j), found in zip(edges, bilateral):
            if found is not None:
                cert = _bilateral_certificate(searcher, i, j, *found)
                gains = [d.gain for d in cert.deviators]
                if min(gains) >= -search.tol and max(gains) > search.tol:
                    logger.info("deviation_found", concept="lfps", kind="bilateral", pair=[i, j])
                    return StabilityReport(concept="lfps", verdict="unstable", certificate=cert, search_family=family)
    except ContestNetError as e:
        logger.warning("lfps_inconclusive", error=str(e))
        return StabilityReport(concept="lfps", verdict="inconclusive", search_family=family, notes=[str(e)])
    return StabilityReport(concept="lfps", verdict="stable", search_family=family)


@dataclass(frozen=True)
class ClassPartition:
    """Players grouped by equilibrium total; class 0 is the strongest (lowest total)."""

    classes: Tuple[Tuple[int, ...], ...]
    totals: Tuple[float, ...]
    roles: Tuple[str, ...]
    tol_rel: float

    @property
    def M(self) -> int:
        return len(self.classes)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(c) for c in self.classes)

    @property
    def class_of(self) -> Tuple[int, ...]:
        out = [0] * len(self.roles)
        for k, members in enumerate(self.classes):
            for p in members:
                out[p] = k
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "classes": [list(c) for c in self.classes],
            "sizes": list(self.sizes),
            "totals": list(self.totals),
            "roles": list(self.roles),
            "tol_rel": self.tol_rel,
        }


def _close(a: float, b: float, tol_rel: float) -> bool:
    scale = max(abs(a), abs(b))
    return scale <= 1e-12 or abs(a - b) <= tol_rel * scale


def classify_partition(eq: EquilibriumResult, tol_rel: Optional[float] = None) -> ClassPartition:
    """
    Group players by total effort and assign contest roles.

    Raises:
        AmbiguousPartitionError: a chain of near-equal totals spans more than the tolerance
    """
    tol_rel = settings.CLASS_TOL_REL if tol_rel is None else tol_rel
    w = eq.totals
    order = [int(p) for p in np.argsort(w, kind="stable")]
    groups: List[List[int]] = []
    for p in order:
        if groups and _close(w[p], w[groups[-1][-1]], tol_rel):
            if not _close(w[p], w[groups[-1][0]], tol_rel):
                raise AmbiguousPartitionError(groups[-1] + [p], tol_rel)
            groups[-1].append(p)
        else:
            groups.append([p])
    class_of = {p: k for k, members in enumerate(groups) for p in members}

    roles = []
    g = eq.structure
    for i in range(g.n):
        opponents = g.neighbors(i)
        if not opponents:
            roles.append("isolated")
            continue
        mine = class_of[i]
        theirs = {class_of[j] for j in opponents}
        if mine in theirs:
            roles.append("peer")
        elif all(k > mine for k in theirs):
            roles.append("attacker")
        elif all(k < mine for k in theirs):
            roles.append("victim")
        else:
            roles.append("hybrid")
    return ClassPartition(
        classes=tuple(tuple(sorted(m)) for m in groups),
        totals=tuple(float(np.mean(w[m])) for m in groups),
        roles=tuple(roles),
        tol_rel=tol_rel,
    )


class MPartiteVerdict(BaseModel):
    passed: bool
    applicable: bool = True
    violations: List[str] = Field(default_factory=list)


def validate_mpartite(p: ClassPartition, g: Structure) -> MPartiteVerdict:
    """
    Check that g is complete multipartite over the classes, with one attacker and one victim class.

    The empty structure has no contests to classify: it passes with ``applicable`` False and
    no check is run.
    """
    if len(p.roles) != g.n:
        raise InvalidInputError("partition and structure disagree on the player count")
    if not g.edges:
        return MPartiteVerdict(passed=True, applicable=False)
    class_of = p.class_of
    violations = []
    for i, j in g.sorted_edges:
        if class_of[i] == class_of[j]:
            violations.append(f"intra-class edge {i}-{j} in class {class_of[i]}")
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if class_of[i] != class_of[j] and not g.has_edge(i, j):
                violations.append(f"missing inter-class link {i}-{j}")
    for k in range(p.M - 1):
        if p.sizes[k] <= p.sizes[k + 1]:
            violations.append(f"class sizes not strictly decreasing: |W_{k}|={p.sizes[k]} <= |W_{k + 1}|={p.sizes[k + 1]}")
    attacker_classes = sorted({class_of[i] for i, role in enumerate(p.roles) if role == "attacker"})
    victim_classes = sorted({class_of[i] for i, role in enumerate(p.roles) if role == "victim"})
    if attacker_classes != [0]:
        violations.append(f"expected exactly one attacker class (index 0), found {attacker_classes}")
    if victim_classes != [p.M - 1] or p.M < 2:
        violations.append(f"expected exactly one victim class (index {p.M - 1}), found {victim_classes}")
    isolated = [i for i, role in enumerate(p.roles) if role == "isolated"]
    if isolated:
        violations.append(f"isolated players {isolated} in a nonempty network")
    return MPartiteVerdict(passed=not violations, violations=violations)


def weaker_target_violations(eq: EquilibriumResult, tol_rel: Optional[float] = None) -> List[Tuple[int, int, int]]:
    """Triples (i, j, k) with ij linked, w_i < w_j <= w_k and ik missing."""
    tol_rel = settings.CLASS_TOL_REL if tol_rel is None else tol_rel
    g, w = eq.structure, eq.totals
    out = []
    for i in range(g.n):
        linked = g.neighbors(i)
        for j in linked:
            if w[i] >= w[j] or _close(w[i], w[j], tol_rel):
                continue
            for k in g.non_neighbors(i):
                if w[k] >= w[j] or _close(w[k], w[j], tol_rel):
                    out.append((i, j, k))
    return sorted(out)


def ordering_violations(eq: EquilibriumResult, p: Optional[ClassPartition] = None) -> List[str]:
    """
    Effort orderings a solved equilibrium must satisfy.

    For every linked pair, the weaker player (higher total) spends no more in the contest,
    with equality only between equal totals. For every linked triangle a, b, c in strictly
    weaker classes: s_ab > s_ac, s_ba > s_ca, s_ca < s_cb, s_ac > s_bc, and a earns more
    from the contest with c than from the one with b.
    """
    p = p or classify_partition(eq)
    s, g = eq.profile.efforts, eq.structure
    class_of = p.class_of
    scale = float(np.max(s, initial=0.0))
    slack = p.tol_rel * max(scale, 1e-12)
    out = []
    for i, j in g.sorted_edges:
        ci, cj = class_of[i], class_of[j]
        if ci == cj:
            if abs(s[i, j] - s[j, i]) > slack:
                out.append(f"equal-strength pair {i}-{j} has unequal efforts")
            continue
        strong, weak = (i, j) if ci < cj else (j, i)
        if not s[strong, weak] > s[weak, strong]:
            out.append(f"weaker player {weak} outspends {strong} in their contest")

    for a, b, c in itertools.permutations(range(g.n), 3):
        if not (class_of[a] < class_of[b] < class_of[c]):
            continue
        if not (g.has_edge(a, b) and g.has_edge(a, c) and g.has_edge(b, c)):
            continue
        checks = (
            (s[a, b] > s[a, c], f"s[{a},{b}] <= s[{a},{c}]"),
            (s[b, a] > s[c, a], f"s[{b},{a}] <= s[{c},{a}]"),
            (s[c, a] < s[c, b], f"s[{c},{a}] >= s[{c},{b}]"),
            (s[a, c] > s[b, c], f"s[{a},{c}] <= s[{b},{c}]"),
        )
        out.extend(message for ok, message in checks if not ok)
        revenue_ac = float(pair_revenues(s[a, c], s[c, a], eq.spec))
        revenue_ab = float(pair_revenues(s[a, b], s[b, a], eq.spec))
        if not revenue_ac > revenue_ab:
            out.append(f"player {a} earns no more against {c} than against {b}")
    return out
