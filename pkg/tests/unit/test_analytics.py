"""
Unit tests for comparative statics and bipartite stability quantities.
"""
import math

import pytest

from contestnet.analytics import (
    attacker_link_benefit_f,
    bipartite_threshold,
    cost_shock_derivatives,
    deviation_value_h,
    effort_derivatives_r,
    effort_derivatives_T,
    h_maximizer,
    r_sign_inequality,
    sweep,
    tripartite_search,
)
from contestnet.errors import InvalidInputError
from contestnet.model import CostSpec, Structure
from contestnet.scenario import Scenario
from contestnet.solver import solve_equilibrium
from contestnet.stability import LfpsSearch

pytestmark = pytest.mark.unit

QUADRATIC = CostSpec()


class TestValueFunctions:
    """Tests for h and f."""

    def test_h_without_opponents(self):
        assert deviation_value_h(0, 0.3, 0.2, QUADRATIC) == 0.0

    @pytest.mark.parametrize("s, expected", [(0.27812, 0.03582), (0.34830, -0.07106)])
    def test_h_values(self, s, expected):
        assert deviation_value_h(1, s, 0.0, QUADRATIC) == pytest.approx(expected, abs=2e-4)

    def test_h_maximizer_matches_attacker_effort(self):
        assert h_maximizer(1, 0.27812, 0.0, QUADRATIC) == pytest.approx(0.48172, abs=1e-4)

    def test_h_maximizer_zero_when_unprofitable(self):
        assert h_maximizer(1, 0.0, 1.0, CostSpec(k1=2.0)) == 0.0

    def test_h_rejects_negative_inputs(self):
        with pytest.raises(InvalidInputError):
            deviation_value_h(-1, 0.2, 0.0, QUADRATIC)

    @pytest.mark.parametrize("a, v, expected", [(3, 1, -0.03582), (2, 1, 0.07106)])
    def test_f_values(self, a, v, expected):
        assert attacker_link_benefit_f(a, v, 0.0, QUADRATIC) == pytest.approx(expected, abs=2e-4)

    def test_f_increasing_in_victims(self):
        n = 12
        values = [attacker_link_benefit_f(n - v, v, 0.0, QUADRATIC) for v in range(1, n // 2 + 1)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_f_rejects_more_victims_than_attackers(self):
        with pytest.raises(InvalidInputError):
            attacker_link_benefit_f(1, 2, 0.0, QUADRATIC)


class TestThreshold:
    """Tests for bipartite_threshold."""

    @pytest.mark.parametrize("n", [2, 3])
    def test_small_populations_have_no_threshold(self, n):
        result = bipartite_threshold(n, 0.0, QUADRATIC)
        assert result.v_star is None
        assert result.max_stable_v is None

    def test_star_of_three(self):
        result = bipartite_threshold(4, 0.0, QUADRATIC)
        assert result.v_star >= 1.0
        assert result.max_stable_v == 1
        assert result.f_values[1] == pytest.approx(-0.03582, abs=2e-4)

    def test_twelve_players(self):
        result = bipartite_threshold(12, 0.0, QUADRATIC)
        assert result.upper_bound == pytest.approx(12 / 2 - 12 / (2 * math.sqrt(5)))
        assert 2.0 <= result.v_star <= result.upper_bound + 1e-9
        assert result.max_stable_v in (2, 3)

    @pytest.mark.parametrize("n", [10, 20, 50])
    def test_threshold_inside_bound(self, n):
        result = bipartite_threshold(n, 0.0, QUADRATIC)
        assert result.v_star is not None
        assert 1.0 <= result.v_star <= result.upper_bound + 1e-9

    @pytest.mark.parametrize("n", [10, 20, 50])
    def test_f_increasing_on_integer_range(self, n):
        values = [attacker_link_benefit_f(n - v, v, 0.0, QUADRATIC) for v in range(1, n // 2)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_rejects_tiny_population(self):
        with pytest.raises(InvalidInputError):
            bipartite_threshold(1, 0.0, QUADRATIC)


class TestEffortDerivatives:
    """Tests for the r and T derivatives on B(a, v)."""

    @pytest.mark.parametrize("a, v, rises", [(35, 1, True), (4, 1, False)])
    def test_small_r_sign(self, benchmark_spec, a, v, rises):
        result = effort_derivatives_r(a, v, None, benchmark_spec)
        assert result.sign_predicate is rises
        assert (result.d_total > 0) is rises

    @pytest.mark.parametrize("a, v, lhs, rhs", [(35, 1, 14.42, 13.83), (4, 1, -4.5, 6.0)])
    def test_inequality_sides(self, a, v, lhs, rhs):
        assert r_sign_inequality(a, v, 2.0) == pytest.approx((lhs, rhs), abs=1e-2)

    def test_victim_effort_falls_with_r(self, make_spec):
        for a, v in ((3, 1), (10, 2), (7, 3)):
            assert effort_derivatives_r(a, v, None, make_spec(r=0.01)).d_victim < 0.0

    def test_r_derivatives_match_finite_differences(self, make_spec):
        r, h, g = 0.05, 1e-5, Structure.bipartite(5, 2)
        result = effort_derivatives_r(5, 2, None, make_spec(r=r))
        up = solve_equilibrium(g, make_spec(r=r + h)).profile.efforts
        down = solve_equilibrium(g, make_spec(r=r - h)).profile.efforts
        assert result.d_attacker == pytest.approx((up[0, 5] - down[0, 5]) / (2 * h), rel=1e-3)
        assert result.d_victim == pytest.approx((up[5, 0] - down[5, 0]) / (2 * h), rel=1e-3)
        assert result.sign_predicate is None

    @pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0])
    @pytest.mark.parametrize("a, v", [(3, 1), (5, 2), (10, 2), (20, 5)])
    def test_r_derivatives_on_grid(self, make_spec, a, v, alpha):
        r, h, g = 0.05, 1e-5, Structure.bipartite(a, v)
        result = effort_derivatives_r(a, v, None, make_spec(r=r, k2=2.0 / alpha, alpha=alpha))
        up = solve_equilibrium(g, make_spec(r=r + h, k2=2.0 / alpha, alpha=alpha)).profile.efforts
        down = solve_equilibrium(g, make_spec(r=r - h, k2=2.0 / alpha, alpha=alpha)).profile.efforts
        assert result.d_attacker == pytest.approx((up[0, a] - down[0, a]) / (2 * h), rel=1e-3, abs=1e-6)
        assert result.d_victim == pytest.approx((up[a, 0] - down[a, 0]) / (2 * h), rel=1e-3, abs=1e-6)

    def test_inequality_carries_to_steeper_costs(self):
        """Whenever the quadratic-cost condition holds, it holds for steeper power costs too."""
        holding = 0
        for v in range(1, 4):
            for a in range(v, 150):
                lhs, rhs = r_sign_inequality(a, v, 2.0)
                if lhs <= rhs:
                    continue
                holding += 1
                for alpha in (2.5, 3.0, 4.0):
                    steep_lhs, steep_rhs = r_sign_inequality(a, v, alpha)
                    assert steep_lhs > steep_rhs, (a, v, alpha)
        assert holding > 0

    def test_T_derivative_scales_with_root(self, benchmark_spec):
        """With r = 0 and quadratic cost efforts grow like sqrt(T)."""
        result = effort_derivatives_T(10, 2, None, benchmark_spec)
        assert result.d_attacker == pytest.approx(result.attacker_effort / 2, rel=1e-6)
        assert result.d_victim == pytest.approx(result.victim_effort / 2, rel=1e-6)

    def test_rejects_mismatched_equilibrium(self, benchmark_spec):
        eq = solve_equilibrium(Structure.bipartite(3, 1), benchmark_spec)
        with pytest.raises(InvalidInputError):
            effort_derivatives_r(10, 2, eq, benchmark_spec)


class TestCostShock:
    """Tests for cost_shock_derivatives."""

    @pytest.mark.parametrize("role, signs", [("attacker", (-1, -1, 1)), ("victim", (-1, -1, -1))])
    def test_signs(self, benchmark_spec, role, signs):
        result = cost_shock_derivatives(5, 2, role, benchmark_spec)
        assert result.signs == signs
        assert result.d_total < 0.0

    @pytest.mark.parametrize("a, v", [(10, 2), (35, 1)])
    @pytest.mark.parametrize("role, signs", [("attacker", (-1, -1, 1)), ("victim", (-1, -1, -1))])
    def test_signs_on_larger_structures(self, benchmark_spec, a, v, role, signs):
        result = cost_shock_derivatives(a, v, role, benchmark_spec)
        assert result.signs[0] == signs[0]
        assert result.signs[2] == signs[2]
        if result.d_same is not None:
            assert result.signs[1] == signs[1]

    @pytest.mark.parametrize("a, v", [(5, 2), (10, 2), (35, 1)])
    @pytest.mark.parametrize("role", ["attacker", "victim"])
    def test_matches_finite_differences(self, benchmark_spec, a, v, role):
        h = 1e-5
        g = Structure.bipartite(a, v)
        result = cost_shock_derivatives(a, v, role, benchmark_spec)
        k = result.shocked_player
        other = a if role == "attacker" else 0
        up = solve_equilibrium(g, benchmark_spec, cost_shock=(k, h)).totals
        down = solve_equilibrium(g, benchmark_spec, cost_shock=(k, -h)).totals
        fd = (up - down) / (2 * h)
        assert result.d_shocked == pytest.approx(fd[k], rel=1e-3)
        if result.d_same is not None:
            assert result.d_same == pytest.approx(fd[k + 1], rel=1e-3)
        assert result.d_other == pytest.approx(fd[other], rel=1e-3)
        assert result.d_total == pytest.approx(fd.sum(), rel=1e-3)

    def test_single_member_class(self, benchmark_spec):
        result = cost_shock_derivatives(3, 1, "victim", benchmark_spec)
        assert result.d_same is None
        assert result.signs[1] is None

    def test_rejects_unknown_role(self, benchmark_spec):
        with pytest.raises(InvalidInputError):
            cost_shock_derivatives(5, 2, "hybrid", benchmark_spec)

    def test_rejects_power_technology(self, make_spec):
        with pytest.raises(InvalidInputError):
            cost_shock_derivatives(5, 2, "attacker", make_spec(kind="power", beta=0.5))


class TestSweep:
    """Tests for parameter sweeps."""

    @pytest.fixture
    def b10v2_scenario(self):
        return Scenario(partition_sizes=[10, 2])

    def test_r_sweep(self, b10v2_scenario):
        table = sweep("r", [0.0, 0.05, 0.1], b10v2_scenario, threads=1)
        assert [record.index for record in table.records] == [0, 1, 2]
        assert all(record.error is None for record in table.records)
        assert all("dw_dr" in record.extra for record in table.records)
        w_stars = [record.w_star for record in table.records]
        assert w_stars[0] == pytest.approx(10 * 0.65366 + 2 * 1.46158, rel=1e-3)
        rows = table.rows()
        assert set(rows[0]) == {"r", "w_star", "dw_dr", "pair_spending", "error"}

    def test_threads_do_not_change_results(self, b10v2_scenario):
        grid = [0.5, 1.0, 1.5, 2.0]
        serial = sweep("T", grid, b10v2_scenario, threads=1)
        threaded = sweep("T", grid, b10v2_scenario, threads=3)
        assert serial.model_dump() == threaded.model_dump()

    @pytest.mark.slow
    def test_star_pair_spending_peaks_inside(self):
        grid = [0.05 * k for k in range(21)]
        table = sweep("r", grid, Scenario(partition_sizes=[200, 1]), threads=1)
        spending = [record.extra["pair_spending"] for record in table.records]
        peak = spending.index(max(spending))
        assert 0 < peak < len(grid) - 1

    @pytest.mark.parametrize("kind, rising", [("T", True), ("cost_scale", False)])
    def test_total_spending_monotone(self, b10v2_scenario, kind, rising):
        table = sweep(kind, [0.5, 0.75, 1.0, 1.5, 2.0], b10v2_scenario, threads=1)
        w = [record.w_star for record in table.records]
        steps = [b - a for a, b in zip(w, w[1:])]
        assert all((step > 0) is rising for step in steps)

    def test_partition_sweep(self, b10v2_scenario):
        table = sweep("partition_v", [1, 1.5, 2], b10v2_scenario, threads=1)
        first, bad, second = table.records
        assert first.extra["deviation_gain"] < 0.0
        assert second.extra["deviation_gain"] < 0.0
        assert bad.error is not None

    @pytest.mark.slow
    def test_deviation_gain_rises_with_victims(self):
        table = sweep("partition_v", list(range(1, 26)), Scenario(partition_sizes=[49, 1]), threads=1)
        assert all(record.error is None for record in table.records)
        gains = [record.extra["deviation_gain"] for record in table.records]
        assert all(b > a for a, b in zip(gains, gains[1:]))

    def test_reply_curve(self):
        scenario = Scenario(n=3, edges=[(0, 1), (1, 2), (0, 2)])
        table = sweep("br_curve", [0.5, 1.0], scenario, pair=(0, 1), threads=1)
        for record in table.records:
            assert record.extra["reply_i"] > 0.0
            assert record.extra["reply_i"] == pytest.approx(record.extra["reply_j"])

    def test_reply_curve_needs_edge(self):
        scenario = Scenario(n=3, edges=[(0, 1)])
        with pytest.raises(InvalidInputError):
            sweep("br_curve", [0.5], scenario, pair=(0, 2))

    @pytest.mark.parametrize("grid", [[], [0.1, 0.1], [0.1, 0.3, 0.2], [float("nan")]])
    def test_rejects_bad_grid(self, b10v2_scenario, grid):
        with pytest.raises(InvalidInputError):
            sweep("r", grid, b10v2_scenario)

    def test_rejects_unknown_kind(self, b10v2_scenario):
        with pytest.raises(InvalidInputError):
            sweep("alpha", [1.0], b10v2_scenario)


class TestTripartiteSearch:
    """Tests for the tripartite structure scan."""

    @pytest.mark.slow
    def test_smallest_population(self, benchmark_spec):
        records = tripartite_search(6, benchmark_spec, LfpsSearch(threads=1))
        assert [record.sizes for record in records] == [(3, 2, 1)]
        assert records[0].verdict in ("stable", "unstable", "inconclusive")

    def test_rejects_small_bound(self, benchmark_spec):
        with pytest.raises(InvalidInputError):
            tripartite_search(5, benchmark_spec)
