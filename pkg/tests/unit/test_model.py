"""
Unit tests for game primitives and payoff evaluation.
"""
import numpy as np
import pytest

from contestnet.errors import InvalidInputError, SingularContestError
from contestnet.model import (
    ContestParams,
    CostSpec,
    Structure,
    StrategyProfile,
    TechnologySpec,
    contest_revenue,
    gradient_field,
    induced_structure,
    marginal_partials,
    marginal_revenue,
    payoff,
    payoff_gradient,
    payoffs,
    revenue_matrix,
    win_probability,
)

pytestmark = pytest.mark.unit


class TestPrimitives:
    """Tests for technology, cost and contest parameters."""

    def test_power_technology(self):
        """Power technology evaluates scale * x**beta."""
        tech = TechnologySpec(kind="power", scale=2.0, exponent=0.5)
        assert tech.value(4.0) == pytest.approx(4.0)
        assert tech.derivative(4.0) == pytest.approx(0.5)
        assert tech.marginal_at_zero == float("inf")

    def test_linear_technology_rejects_exponent(self):
        with pytest.raises(InvalidInputError):
            TechnologySpec(kind="linear", exponent=0.5)

    @pytest.mark.parametrize("kwargs", [
        {"k1": -1.0},
        {"k2": 0.0},
        {"alpha": 1.0},
        {"alpha": float("nan")},
    ])
    def test_cost_rejects_bad_parameters(self, kwargs):
        with pytest.raises(InvalidInputError):
            CostSpec(**kwargs)

    def test_benchmark_cost(self):
        """The benchmark family has c'(1) = 2 for every alpha."""
        for alpha in (2.0, 3.0, 5.0):
            cost = CostSpec.benchmark(alpha)
            assert cost.derivative(1.0) == pytest.approx(2.0)
        assert CostSpec.benchmark(2.0).value(3.0) == pytest.approx(9.0)

    def test_scaled_cost(self):
        cost = CostSpec(k1=1.0, k2=1.0, alpha=2.0).scaled(3.0)
        assert cost.value(1.0) == pytest.approx(6.0)

    @pytest.mark.parametrize("kwargs", [{"r": -0.1}, {"T": 0.0}, {"r": float("inf")}])
    def test_params_reject_bad_values(self, kwargs):
        with pytest.raises(InvalidInputError):
            ContestParams(**kwargs)


class TestStructure:
    """Tests for contest structures."""

    def test_bipartite_layout(self):
        g = Structure.bipartite(10, 2)
        assert g.n == 12
        assert len(g.edges) == 20
        assert g.partition_sizes == (10, 2)
        assert g.class_of[:10] == (0,) * 10
        assert g.neighbors(0) == frozenset({10, 11})
        assert g.non_neighbors(0) == frozenset(range(1, 10))

    def test_complete(self):
        g = Structure.complete(4)
        assert len(g.edges) == 6
        assert all(g.degree(i) == 3 for i in range(4))

    def test_from_edges_normalizes(self):
        g = Structure.from_edges(3, [(2, 0), (1, 2)])
        assert g.sorted_edges == [(0, 2), (1, 2)]
        assert g.has_edge(0, 2) and g.has_edge(2, 0)

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 3)], [(0, 1), (1, 0)], [(0, 1, 2)]])
    def test_from_edges_rejects_bad_edges(self, edges):
        with pytest.raises(InvalidInputError):
            Structure.from_edges(3, edges)

    def test_equality_ignores_partition(self):
        assert Structure.bipartite(1, 1) == Structure.complete(2)

    def test_edit_and_subgraph(self):
        g = Structure.complete(3)
        h = g.without_edges([(0, 1)])
        assert h.is_subgraph_of(g)
        assert not g.is_subgraph_of(h)
        assert h.with_edges([(1, 0)]) == g

    def test_to_networkx(self, example_structure):
        graph = example_structure.to_networkx()
        assert graph.number_of_nodes() == 6
        assert graph.number_of_edges() == 7


class TestStrategyProfile:
    """Tests for effort matrices."""

    @pytest.mark.parametrize("efforts", [
        [[0.0, -1.0], [0.0, 0.0]],
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, float("nan")], [0.0, 0.0]],
        [[0.0, 1.0, 0.0]],
    ])
    def test_rejects_invalid_matrices(self, efforts):
        with pytest.raises(InvalidInputError):
            StrategyProfile(np.array(efforts))

    def test_is_immutable(self):
        s = StrategyProfile.zeros(3)
        with pytest.raises(ValueError):
            s.efforts[0, 1] = 1.0

    def test_totals_and_induced_structure(self):
        s = StrategyProfile.zeros(3).with_entries({(0, 1): 0.5, (2, 1): 0.25})
        assert s.totals.tolist() == [0.5, 0.0, 0.25]
        assert induced_structure(s).sorted_edges == [(0, 1), (1, 2)]


class TestPayoffs:
    """Tests for contest revenue and payoffs."""

    def test_contest_revenue(self, benchmark_spec):
        assert contest_revenue(1.0, 0.5, benchmark_spec.params, benchmark_spec.technology) == pytest.approx(1 / 3)
        assert contest_revenue(1.0, 0.5, ContestParams(r=1.0), TechnologySpec()) == pytest.approx(0.2)

    def test_revenue_is_zero_sum(self, make_spec):
        spec = make_spec(r=0.3, T=2.0)
        a = contest_revenue(0.7, 0.2, spec.params, spec.technology)
        b = contest_revenue(0.2, 0.7, spec.params, spec.technology)
        assert a == pytest.approx(-b)

    def test_revenue_at_origin(self, benchmark_spec):
        assert contest_revenue(0.0, 0.0, benchmark_spec.params, benchmark_spec.technology) == 0.0
        assert win_probability(0.0, 0.0, benchmark_spec.params, benchmark_spec.technology) == 0.0

    def test_revenue_rejects_negative_effort(self, benchmark_spec):
        with pytest.raises(InvalidInputError):
            contest_revenue(-1.0, 0.0, benchmark_spec.params, benchmark_spec.technology)

    def test_win_probability_with_draws(self):
        p = win_probability(1.0, 1.0, ContestParams(r=2.0), TechnologySpec())
        assert p == pytest.approx(0.25)

    def test_marginal_revenue(self, benchmark_spec):
        assert marginal_revenue(1.0, 1.0, benchmark_spec) == pytest.approx(0.5)

    def test_marginal_partials_match_finite_differences(self, make_spec):
        spec = make_spec(r=0.4, kind="power", beta=0.6)
        a, b, h = 0.8, 0.3, 1e-6
        own, opp = marginal_partials(a, b, spec)
        own_fd = (marginal_revenue(a + h, b, spec) - marginal_revenue(a - h, b, spec)) / (2 * h)
        opp_fd = (marginal_revenue(a, b + h, spec) - marginal_revenue(a, b - h, spec)) / (2 * h)
        assert own == pytest.approx(own_fd, rel=1e-5)
        assert opp == pytest.approx(opp_fd, rel=1e-5)

    def test_complete_triangle_payoff(self, benchmark_spec):
        """Symmetric K3 efforts 1/(2 sqrt 2) leave every player with -1/2."""
        s = np.full((3, 3), 1.0 / (2.0 * np.sqrt(2.0)))
        np.fill_diagonal(s, 0.0)
        profile = StrategyProfile(s)
        assert payoffs(profile, benchmark_spec) == pytest.approx([-0.5] * 3)
        assert payoff(1, profile, benchmark_spec) == pytest.approx(-0.5)

    def test_revenue_matrix_is_antisymmetric(self, make_spec):
        spec = make_spec(r=0.5)
        rng = np.random.default_rng(3)
        s = rng.random((4, 4))
        np.fill_diagonal(s, 0.0)
        rev = revenue_matrix(s, spec)
        np.testing.assert_allclose(rev, -rev.T, atol=1e-15)

    def test_payoff_gradient_singular(self, benchmark_spec):
        with pytest.raises(SingularContestError) as exc:
            payoff_gradient(0, StrategyProfile.zeros(2), benchmark_spec)
        assert exc.value.pair == (0, 1)

    def test_payoff_gradient_with_draws(self, make_spec):
        spec = make_spec(r=1.0)
        grad = payoff_gradient(0, StrategyProfile.zeros(3), spec, targets=[1])
        assert grad.tolist() == pytest.approx([0.0, 1.0, 0.0])

    def test_gradient_field_masks_missing_links(self, make_spec):
        spec = make_spec(r=1.0)
        g = Structure.from_edges(3, [(0, 1)])
        field_ = gradient_field(StrategyProfile.zeros(3), g, spec)
        assert field_[0, 1] == pytest.approx(1.0)
        assert field_[0, 2] == 0.0
        assert field_[2, 0] == 0.0

    def test_player_index_checked(self, benchmark_spec):
        with pytest.raises(InvalidInputError):
            payoff(5, StrategyProfile.zeros(2), benchmark_spec)


FAMILIES = [
    {"r": 0.3},
    {"r": 0.1, "kind": "power", "beta": 0.6},
    {"r": 0.0, "k1": 0.2, "k2": 0.7, "alpha": 3.0},
    {"r": 0.05, "T": 2.5, "kind": "power", "scale": 1.5, "beta": 0.8, "alpha": 1.5},
]


def _random_profile(rng, n=4):
    s = rng.uniform(0.1, 1.5, size=(n, n))
    np.fill_diagonal(s, 0.0)
    return StrategyProfile(s)


class TestDerivatives:
    """Finite-difference checks of the primitive and payoff derivatives."""

    @pytest.mark.parametrize("tech", [
        TechnologySpec(),
        TechnologySpec(scale=2.0),
        TechnologySpec(kind="power", exponent=0.6),
        TechnologySpec(kind="power", scale=1.5, exponent=0.3),
    ])
    @pytest.mark.parametrize("x", [0.2, 0.7, 1.9])
    def test_technology_derivatives(self, tech, x):
        h = 1e-6
        first = (tech.value(x + h) - tech.value(x - h)) / (2 * h)
        second = (tech.derivative(x + h) - tech.derivative(x - h)) / (2 * h)
        assert tech.derivative(x) == pytest.approx(first, rel=1e-6)
        assert tech.second_derivative(x) == pytest.approx(second, rel=1e-5, abs=1e-8)

    @pytest.mark.parametrize("cost", [
        CostSpec(),
        CostSpec.benchmark(3.0),
        CostSpec(k1=0.3, k2=0.7, alpha=2.5),
        CostSpec(k1=1.0, k2=2.0, alpha=1.5),
    ])
    @pytest.mark.parametrize("x", [0.2, 0.7, 1.9])
    def test_cost_derivatives(self, cost, x):
        h = 1e-6
        first = (cost.value(x + h) - cost.value(x - h)) / (2 * h)
        second = (cost.derivative(x + h) - cost.derivative(x - h)) / (2 * h)
        assert cost.derivative(x) == pytest.approx(first, rel=1e-6)
        assert cost.second_derivative(x) == pytest.approx(second, rel=1e-5)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_payoff_gradient_matches_finite_differences(self, make_spec, family):
        spec = make_spec(**family)
        rng = np.random.default_rng(11)
        h = 1e-6
        for _ in range(100):
            s = _random_profile(rng)
            i = int(rng.integers(4))
            grad = payoff_gradient(i, s, spec)
            for j in range(4):
                if j == i:
                    continue
                up = payoff(i, s.with_entries({(i, j): s.efforts[i, j] + h}), spec)
                down = payoff(i, s.with_entries({(i, j): s.efforts[i, j] - h}), spec)
                assert grad[j] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-7)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_payoff_is_concave_in_own_row(self, make_spec, family):
        spec = make_spec(**family)
        rng = np.random.default_rng(5)
        h = 1e-5
        for _ in range(20):
            s = _random_profile(rng)
            others = [1, 2, 3]
            hessian = np.empty((3, 3))
            for col, j in enumerate(others):
                up = payoff_gradient(0, s.with_entries({(0, j): s.efforts[0, j] + h}), spec)
                down = payoff_gradient(0, s.with_entries({(0, j): s.efforts[0, j] - h}), spec)
                hessian[:, col] = (up[others] - down[others]) / (2 * h)
            hessian = 0.5 * (hessian + hessian.T)
            assert np.linalg.eigvalsh(hessian).max() < 1e-6


class TestWinProbability:
    """Tests for win probabilities."""

    @pytest.mark.parametrize("r", [0.0, 0.2, 3.0])
    def test_bounds_and_revenue_identity(self, r):
        params = ContestParams(r=r, T=1.5)
        tech = TechnologySpec(kind="power", exponent=0.7)
        rng = np.random.default_rng(2)
        for a, b in rng.uniform(0.0, 2.0, size=(50, 2)):
            win = win_probability(a, b, params, tech)
            lose = win_probability(b, a, params, tech)
            assert 0.0 <= win <= 1.0
            assert win + lose <= 1.0 + 1e-12
            if r == 0.0:
                assert win + lose == pytest.approx(1.0)
            assert contest_revenue(a, b, params, tech) == pytest.approx(1.5 * (win - lose))

    def test_certain_win_against_idle_opponent(self):
        assert win_probability(1.0, 0.0, ContestParams(), TechnologySpec()) == 1.0
