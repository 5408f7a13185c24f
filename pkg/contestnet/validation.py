"""
Invariant checks on one scenario, run by the ``validate`` command.

Every check reports pass, fail or error with a short detail; the overall status is
"pass" only when every check passes.
"""
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from contestnet.config import settings
from contestnet.errors import ContestNetError
from contestnet.logger import get_logger
from contestnet.model import StrategyProfile, induced_structure
from contestnet.scenario import Scenario
from contestnet.solver import closed_form_bipartite, solve_equilibrium, w_fixed_point
from contestnet.stability import (
    check_lfps,
    check_nash,
    check_strong_pairwise,
    classify_partition,
    ordering_violations,
    replay_certificate,
    validate_mpartite,
    weaker_target_violations,
)

logger = get_logger(__name__)

REPLAY_TOL = 1e-9
AGREEMENT_TOL = 1e-6
REDUCTION_TOL = 1e-8


class CheckFailed(Exception):
    """Raised inside a check to report a failed property with its detail."""


class ValidationRun:
    """Lazily shared equilibrium and LFPS report for the checks of one scenario."""

    def __init__(self, scenario: Scenario, tol: Optional[float] = None, seed: Optional[int] = None):
        self.scenario = scenario
        self.g = scenario.structure()
        self.spec = scenario.game_spec()
        self.tol = settings.SOLVER_TOL if tol is None else tol
        self.seed = seed

    @cached_property
    def eq(self):
        return solve_equilibrium(self.g, self.spec, tol=self.tol, seed=self.seed)

    @cached_property
    def lfps(self):
        return check_lfps(self.g, self.spec, eq=self.eq)

    def check_residual(self) -> str:
        if self.eq.residual > self.tol:
            raise CheckFailed(f"KKT residual {self.eq.residual:.3e} exceeds {self.tol:.1e}")
        if not induced_structure(self.eq.profile).is_subgraph_of(self.g):
            raise CheckFailed("effort placed on a missing link")
        return f"residual {self.eq.residual:.3e} via {self.eq.method}"

    def check_method_agreement(self) -> str:
        if not self.g.edges:
            return "empty structure"
        profiles = {
            method: solve_equilibrium(self.g, self.spec, method=method, tol=self.tol, reduce=False).profile.efforts
            for method in ("newton", "best_response")
        }
        gap = float(np.max(np.abs(profiles["newton"] - profiles["best_response"])))
        if gap > AGREEMENT_TOL:
            raise CheckFailed(f"newton and best_response differ by {gap:.3e}")
        return f"max difference {gap:.3e}"

    def check_gradient_flow(self) -> str:
        if not self.g.edges:
            return "empty structure"
        flow = solve_equilibrium(self.g, self.spec, method="gradient_flow", tol=self.tol)
        gap = float(np.max(np.abs(flow.profile.efforts - self.eq.profile.efforts)))
        if gap > AGREEMENT_TOL:
            raise CheckFailed(f"gradient flow endpoint differs by {gap:.3e}")
        return f"max difference {gap:.3e} after {flow.iterations} steps"

    def check_reduction(self) -> str:
        if self.g.partition_sizes is None or not self.g.edges:
            return "not a complete multipartite scenario"
        full = solve_equilibrium(self.g, self.spec, tol=self.tol, reduce=False)
        reduced = solve_equilibrium(self.g, self.spec, tol=self.tol, reduce=True)
        gap = float(np.max(np.abs(full.profile.efforts - reduced.profile.efforts)))
        if gap > REDUCTION_TOL:
            raise CheckFailed(f"class-pair solve differs from the full solve by {gap:.3e}")
        return f"max difference {gap:.3e}"

    def check_totals_identity(self) -> str:
        tech = self.spec.technology
        if not tech.is_linear:
            return "technology is not linear"
        if not self.eq.is_interior:
            return "equilibrium is not interior"
        totals = w_fixed_point(self.g, tech.scale, self.spec.cost, self.spec.r, T=self.spec.T)
        gap = float(np.max(np.abs(totals - self.eq.totals), initial=0.0))
        if gap > REDUCTION_TOL:
            raise CheckFailed(f"totals identity off by {gap:.3e}")
        return f"max difference {gap:.3e}"

    def check_closed_form(self) -> str:
        sizes = self.g.partition_sizes
        tech, cost = self.spec.technology, self.spec.cost
        applies = (
            sizes is not None and len(sizes) == 2 and tech.is_linear and tech.scale == 1.0
            and self.spec.r == 0.0 and self.spec.T == 1.0 and cost.k1 == 0.0
            and cost.alpha >= 2.0 and np.isclose(cost.k2, 2.0 / cost.alpha)
        )
        if not applies:
            return "closed form does not apply"
        a, v = sizes
        attacker, victim = closed_form_bipartite(a, v, cost.alpha)
        s = self.eq.profile.efforts
        gap = max(abs(s[0, a] - attacker), abs(s[a, 0] - victim))
        if gap > REDUCTION_TOL:
            raise CheckFailed(f"closed form off by {gap:.3e}")
        return f"max difference {gap:.3e}"

    def check_orderings(self) -> str:
        violations = ordering_violations(self.eq)
        if violations:
            raise CheckFailed("; ".join(violations[:5]))
        return "strength and triangle orderings hold"

    def check_nash_predicate(self) -> str:
        report = check_nash(StrategyProfile.zeros(self.g.n), self.spec)
        empty_stable = report.verdict == "stable"
        if empty_stable != report.predicate.holds:
            raise CheckFailed(f"empty profile verdict {report.verdict} contradicts the predicate")
        return f"empty profile {report.verdict}, predicate holds={report.predicate.holds}"

    def check_strong_pairwise_refines_nash(self) -> str:
        report = check_strong_pairwise(self.eq.profile, self.spec)
        nash = check_nash(self.eq.profile, self.spec)
        if report.verdict == "stable" and nash.verdict != "stable":
            raise CheckFailed("strongly pairwise stable profile is not Nash stable")
        if report.certificate is not None:
            self._replay(report.certificate)
        return f"strong pairwise {report.verdict}, nash {nash.verdict}"

    def check_lfps_certificate(self) -> str:
        report = self.lfps
        if report.verdict == "inconclusive":
            raise CheckFailed("; ".join(report.notes) or "search inconclusive")
        if report.certificate is not None:
            self._replay(report.certificate)
            return f"unstable, {report.certificate.kind} certificate replays"
        return f"{report.verdict} ({report.search_family})"

    def check_lfps_structure(self) -> str:
        if self.lfps.verdict != "stable":
            return f"structure is {self.lfps.verdict}"
        verdict = validate_mpartite(classify_partition(self.eq), self.g)
        if not verdict.passed:
            raise CheckFailed("; ".join(verdict.violations))
        triples = weaker_target_violations(self.eq)
        if triples:
            raise CheckFailed(f"linked to j but not to a weakly weaker k: {triples[:5]}")
        return "stable structure is complete multipartite"

    def _replay(self, certificate) -> None:
        deltas = replay_certificate(certificate, self.eq.profile, self.spec)
        for deviator in certificate.deviators:
            if abs(deltas[deviator.player] - deviator.gain) > REPLAY_TOL:
                raise CheckFailed(f"certificate for player {deviator.player} does not replay")

    def checks(self) -> List[Callable[[], str]]:
        return [
            self.check_residual,
            self.check_method_agreement,
            self.check_gradient_flow,
            self.check_reduction,
            self.check_totals_identity,
            self.check_closed_form,
            self.check_orderings,
            self.check_nash_predicate,
            self.check_strong_pairwise_refines_nash,
            self.check_lfps_certificate,
            self.check_lfps_structure,
        ]


def run_checks(scenario: Scenario, tol: Optional[float] = None, seed: Optional[int] = None) -> Dict[str, Any]:
    """
    Run every invariant check on a scenario.

    Returns:
        Dictionary with the overall status and one entry per named check
    """
    run = ValidationRun(scenario, tol=tol, seed=seed)
    checks: List[Dict[str, str]] = []
    status = "pass"
    for check in run.checks():
        name = check.__name__.removeprefix("check_")
        try:
            detail = check()
            checks.append({"name": name, "status": "pass", "detail": detail})
        except CheckFailed as e:
            checks.append({"name": name, "status": "fail", "detail": str(e)})
            status = "fail"
        except ContestNetError as e:
            checks.append({"name": name, "status": "error", "detail": str(e)})
            status = "fail"
        logger.debug("check_finished", check=name, status=checks[-1]["status"])

    return {
        "status": status,
        "players": run.g.n,
        "edges": len(run.g.edges),
        "checks": checks,
    }
