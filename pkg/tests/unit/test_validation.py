"""
Unit tests for the invariant suite behind the validate command.
"""
import pytest

from contestnet.errors import ConvergenceError
from contestnet.scenario import Scenario
from contestnet.validation import ValidationRun, run_checks

pytestmark = pytest.mark.unit

CHECK_NAMES = [
    "residual",
    "method_agreement",
    "gradient_flow",
    "reduction",
    "totals_identity",
    "closed_form",
    "orderings",
    "nash_predicate",
    "strong_pairwise_refines_nash",
    "lfps_certificate",
    "lfps_structure",
]


def _by_name(result):
    return {check["name"]: check for check in result["checks"]}


class TestRunChecks:
    """Tests for run_checks."""

    def test_stable_bipartite_passes(self, override_settings):
        override_settings(THREADS=1)
        result = run_checks(Scenario(partition_sizes=[10, 2]))
        assert result["status"] == "pass", result["checks"]
        assert result["players"] == 12
        assert result["edges"] == 20
        assert [check["name"] for check in result["checks"]] == CHECK_NAMES

    def test_unstable_star_still_passes(self, override_settings):
        """An unstable structure passes when its certificate replays."""
        override_settings(THREADS=1)
        result = run_checks(Scenario(partition_sizes=[2, 1]))
        checks = _by_name(result)
        assert checks["lfps_certificate"]["status"] == "pass"
        assert checks["lfps_certificate"]["detail"].startswith("unstable")
        assert checks["lfps_structure"]["detail"] == "structure is unstable"

    def test_skipped_checks_on_general_structure(self):
        scenario = Scenario(n=4, edges=[(0, 1), (1, 2), (2, 3)], r=0.1)
        checks = _by_name(run_checks(scenario))
        assert checks["reduction"]["detail"] == "not a complete multipartite scenario"
        assert checks["closed_form"]["detail"] == "closed form does not apply"

    def test_empty_structure(self):
        scenario = Scenario(n=3, edges=[], r=2.0, cost={"k1": 1.0})
        checks = _by_name(run_checks(scenario))
        assert checks["method_agreement"]["detail"] == "empty structure"
        assert checks["nash_predicate"]["status"] == "pass"

    def test_solver_failure_is_reported_per_check(self, mocker):
        mocker.patch("contestnet.validation.solve_equilibrium", side_effect=ConvergenceError("stalled", 1.0, 5))
        result = run_checks(Scenario(partition_sizes=[3, 1]))
        assert result["status"] == "fail"
        checks = _by_name(result)
        assert checks["residual"]["status"] == "error"
        assert "stalled" in checks["residual"]["detail"]
        assert checks["nash_predicate"]["status"] == "pass"

    def test_failed_property(self, mocker):
        mocker.patch("contestnet.validation.ordering_violations", return_value=["s[0,1] <= s[0,2]"])
        result = run_checks(Scenario(partition_sizes=[3, 1]))
        assert result["status"] == "fail"
        orderings = _by_name(result)["orderings"]
        assert orderings["status"] == "fail"
        assert "s[0,1]" in orderings["detail"]


class TestValidationRun:
    """Tests for the state shared by the checks of one scenario."""

    def test_equilibrium_is_solved_once(self, mocker):
        from contestnet import validation

        spy = mocker.spy(validation, "solve_equilibrium")
        run = ValidationRun(Scenario(partition_sizes=[3, 1]))
        first = run.eq
        assert run.eq is first
        assert spy.call_count == 1

    def test_default_tolerance_comes_from_settings(self, override_settings):
        override_settings(SOLVER_TOL=1e-8)
        assert ValidationRun(Scenario(partition_sizes=[3, 1])).tol == 1e-8
