"""
Game primitives and payoff evaluation.

A contest between i and j pays player i
    T * (phi(s_ij) - phi(s_ji)) / (phi(s_ij) + phi(s_ji) + r)
and each player pays c(w_i) on its total effort w_i = sum_j s_ij.
"""
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from contestnet.errors import InvalidInputError, SingularContestError

ArrayLike = Union[float, np.ndarray]
Edge = Tuple[int, int]


def _unwrap(arr: np.ndarray) -> ArrayLike:
    return float(arr) if np.ndim(arr) == 0 else arr


def _check_effort(value: float, name: str):
    if not math.isfinite(value) or value < 0:
        raise InvalidInputError(f"{name} must be finite and >= 0, got {value!r}")


def _check_positive(value: float, name: str):
    if not math.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class TechnologySpec:
    """phi(x) = scale * x**exponent; the linear kind fixes the exponent at 1."""

    kind: Literal["linear", "power"] = "linear"
    scale: float = 1.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "power"):
            raise InvalidInputError(f"unknown technology kind {self.kind!r}")
        _check_positive(self.scale, "technology scale")
        if self.kind == "linear" and self.exponent != 1.0:
            raise InvalidInputError("linear technology fixes the exponent at 1")
        if not (math.isfinite(self.exponent) and 0.0 < self.exponent <= 1.0):
            raise InvalidInputError(f"technology exponent must lie in (0, 1], got {self.exponent!r}")

    @property
    def is_linear(self) -> bool:
        return self.exponent == 1.0

    @property
    def marginal_at_zero(self) -> float:
        return self.scale if self.is_linear else math.inf

    def value(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return _unwrap(self.scale * x)
        return _unwrap(self.scale * np.power(x, self.exponent))

    def derivative(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return _unwrap(np.full_like(x, self.scale))
        with np.errstate(divide="ignore"):
            return _unwrap(self.scale * self.exponent * np.power(x, self.exponent - 1.0))

    def second_derivative(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return _unwrap(np.zeros_like(x))
        beta = self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            return _unwrap(self.scale * beta * (beta - 1.0) * np.power(x, beta - 2.0))


@dataclass(frozen=True)
class CostSpec:
    """c(x) = k1 * x + k2 * x**alpha."""

    k1: float = 0.0
    k2: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.k1) or self.k1 < 0:
            raise InvalidInputError(f"cost k1 must be finite and >= 0, got {self.k1!r}")
        _check_positive(self.k2, "cost k2")
        if not (math.isfinite(self.alpha) and self.alpha > 1.0):
            raise InvalidInputError(f"cost exponent alpha must exceed 1, got {self.alpha!r}")

    @classmethod
    def benchmark(cls, alpha: float = 2.0) -> "CostSpec":
        """c(x) = (2/alpha) x**alpha; alpha = 2 gives x**2."""
        return cls(k1=0.0, k2=2.0 / alpha, alpha=alpha)

    def scaled(self, factor: float) -> "CostSpec":
        _check_positive(factor, "cost scale")
        return replace(self, k1=self.k1 * factor, k2=self.k2 * factor)

    def value(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        return _unwrap(self.k1 * x + self.k2 * np.power(x, self.alpha))

    def derivative(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        return _unwrap(self.k1 + self.k2 * self.alpha * np.power(x, self.alpha - 1.0))

    def second_derivative(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return _unwrap(self.k2 * self.alpha * (self.alpha - 1.0) * np.power(x, self.alpha - 2.0))


@dataclass(frozen=True)
class ContestParams:
    r: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.r) or self.r < 0:
            raise InvalidInputError(f"draw parameter r must be finite and >= 0, got {self.r!r}")
        _check_positive(self.T, "transfer T")


@dataclass(frozen=True)
class GameSpec:
    """The primitives a game needs besides its structure."""

    technology: TechnologySpec = field(default_factory=TechnologySpec)
    cost: CostSpec = field(default_factory=CostSpec)
    params: ContestParams = field(default_factory=ContestParams)

    @property
    def r(self) -> float:
        return self.params.r

    @property
    def T(self) -> float:
        return self.params.T

    def with_params(self, r: Optional[float] = None, T: Optional[float] = None) -> "GameSpec":
        params = ContestParams(
            r=self.params.r if r is None else r,
            T=self.params.T if T is None else T,
        )
        return replace(self, params=params)

    def with_cost(self, cost: CostSpec) -> "GameSpec":
        return replace(self, cost=cost)


def _normalize_edge(edge: Sequence[int], n: int) -> Edge:
    if len(edge) != 2:
        raise InvalidInputError(f"edge {edge!r} must have two endpoints")
    i, j = int(edge[0]), int(edge[1])
    if i == j:
        raise InvalidInputError(f"self-loop on player {i}")
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidInputError(f"edge {edge!r} references a player outside 0..{n - 1}")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Structure:
    """
    Undirected simple graph of possible contests.

    ``partition_sizes`` is kept when the structure was built as a complete multipartite graph,
    with players numbered class by class; it is ignored by equality.
    """

    n: int
    edges: FrozenSet[Edge] = frozenset()
    partition_sizes: Optional[Tuple[int, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise InvalidInputError(f"player count must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", frozenset(_normalize_edge(e, self.n) for e in self.edges))
        if self.partition_sizes is not None:
            sizes = tuple(int(m) for m in self.partition_sizes)
            if any(m <= 0 for m in sizes) or sum(sizes) != self.n:
                raise InvalidInputError(f"partition sizes {sizes} must be positive and sum to n={self.n}")
            object.__setattr__(self, "partition_sizes", sizes)

    @classmethod
    def empty(cls, n: int) -> "Structure":
        return cls(n)

    @classmethod
    def complete(cls, n: int) -> "Structure":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Structure":
        normalized = [_normalize_edge(e, n) for e in edges]
        if len(set(normalized)) != len(normalized):
            raise InvalidInputError("duplicate edges")
        return cls(n, frozenset(normalized))

    @classmethod
    def complete_multipartite(cls, sizes: Sequence[int]) -> "Structure":
        sizes = tuple(int(m) for m in sizes)
        if not sizes or any(m <= 0 for m in sizes):
            raise InvalidInputError(f"partition sizes must be positive, got {sizes}")
        graph = nx.complete_multipartite_graph(*sizes)
        return cls(sum(sizes), frozenset(graph.edges()), partition_sizes=sizes)

    @classmethod
    def bipartite(cls, a: int, v: int) -> "Structure":
        """B(a, v): attackers 0..a-1, victims a..a+v-1."""
        return cls.complete_multipartite((a, v))

    @cached_property
    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        adj.setflags(write=False)
        return adj

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @cached_property
    def class_of(self) -> Optional[Tuple[int, ...]]:
        if self.partition_sizes is None:
            return None
        return tuple(k for k, m in enumerate(self.partition_sizes) for _ in range(m))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> FrozenSet[int]:
        return frozenset(np.flatnonzero(self.adjacency[i]).tolist())

    def degree(self, i: int) -> int:
        return int(self.degrees[i])

    def non_neighbors(self, i: int) -> FrozenSet[int]:
        """F_i: players other than i that i is not linked to."""
        return frozenset(j for j in range(self.n) if j != i and not self.adjacency[i, j])

    def with_edges(self, added: Iterable[Sequence[int]]) -> "Structure":
        return Structure(self.n, self.edges | {_normalize_edge(e, self.n) for e in added})

    def without_edges(self, removed: Iterable[Sequence[int]]) -> "Structure":
        return Structure(self.n, self.edges - {_normalize_edge(e, self.n) for e in removed})

    def is_subgraph_of(self, other: "Structure") -> bool:
        return self.n == other.n and self.edges <= other.edges

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.sorted_edges)
        return graph


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """Nonnegative n x n effort matrix with zero diagonal; row sums are the totals w_i."""

    efforts: np.ndarray

    def __post_init__(self):
        arr = np.array(self.efforts, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"effort matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("effort matrix has non-finite entries")
        if np.any(arr < 0):
            raise InvalidInputError("effort matrix has negative entries")
        if np.any(np.diag(arr) != 0):
            raise InvalidInputError("effort matrix must have a zero diagonal")
        arr.setflags(write=False)
        object.__setattr__(self, "efforts", arr)

    @classmethod
    def zeros(cls, n: int) -> "StrategyProfile":
        return cls(np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.efforts.shape[0]

    @property
    def totals(self) -> np.ndarray:
        return self.efforts.sum(axis=1)

    def effort(self, i: int, j: int) -> float:
        return float(self.efforts[i, j])

    def with_row(self, i: int, row: Sequence[float]) -> "StrategyProfile":
        arr = self.efforts.copy()
        arr[i] = np.asarray(row, dtype=float)
        arr[i, i] = 0.0
        return StrategyProfile(arr)

    def with_entries(self, entries: Dict[Edge, float]) -> "StrategyProfile":
        arr = self.efforts.copy()
        for (i, j), value in entries.items():
            arr[i, j] = value
        return StrategyProfile(arr)

    def to_list(self) -> List[List[float]]:
        return self.efforts.tolist()


def _check_player(i: int, n: int):
    if not 0 <= i < n:
        raise InvalidInputError(f"player index {i} out of range 0..{n - 1}")


def contest_revenue(s_ij: float, s_ji: float, params: ContestParams, tech: TechnologySpec) -> float:
    """Expected revenue of i from its contest with j; 0 at the r = 0 origin."""
    _check_effort(s_ij, "s_ij")
    _check_effort(s_ji, "s_ji")
    a, b = tech.value(s_ij), tech.value(s_ji)
    denom = a + b + params.r
    if denom == 0.0:
        return 0.0
    return params.T * (a - b) / denom


def win_probability(s_ij: float, s_ji: float, params: ContestParams, tech: TechnologySpec) -> float:
    _check_effort(s_ij, "s_ij")
    _check_effort(s_ji, "s_ji")
    a, b = tech.value(s_ij), tech.value(s_ji)
    denom = a + b + params.r
    if denom == 0.0:
        return 0.0
    return a / denom


def pair_revenues(s_ij: ArrayLike, s_ji: ArrayLike, spec: GameSpec) -> ArrayLike:
    """Vectorised contest_revenue without input checks."""
    phi_a = np.asarray(spec.technology.value(np.asarray(s_ij, dtype=float)))
    phi_b = np.asarray(spec.technology.value(np.asarray(s_ji, dtype=float)))
    denom = phi_a + phi_b + spec.r
    with np.errstate(divide="ignore", invalid="ignore"):
        rev = np.where(denom > 0.0, spec.T * (phi_a - phi_b) / denom, 0.0)
    return _unwrap(rev)


def revenue_matrix(efforts: np.ndarray, spec: GameSpec) -> np.ndarray:
    """Entry (i, j) is i's expected revenue from the contest with j."""
    phi = np.asarray(spec.technology.value(efforts))
    denom = phi + phi.T + spec.r
    with np.errstate(divide="ignore", invalid="ignore"):
        rev = spec.T * (phi - phi.T) / denom
    rev[denom == 0.0] = 0.0
    return rev


def marginal_revenue(s_ij: ArrayLike, s_ji: ArrayLike, spec: GameSpec) -> ArrayLike:
    """Partial of i's contest revenue in s_ij; nan at the singular r = 0 origin."""
    tech = spec.technology
    a = np.asarray(s_ij, dtype=float)
    b = np.asarray(s_ji, dtype=float)
    phi_b = np.asarray(tech.value(b))
    k = spec.r + np.asarray(tech.value(a)) + phi_b
    with np.errstate(divide="ignore", invalid="ignore"):
        out = spec.T * (spec.r + 2.0 * phi_b) * np.asarray(tech.derivative(a)) / k**2
    return _unwrap(out)


def marginal_partials(s_ij: ArrayLike, s_ji: ArrayLike, spec: GameSpec) -> Tuple[ArrayLike, ArrayLike]:
    """Derivatives of marginal_revenue(s_ij, s_ji) in its own and in the opposing effort."""
    tech = spec.technology
    a = np.asarray(s_ij, dtype=float)
    b = np.asarray(s_ji, dtype=float)
    phi_a, phi_b = np.asarray(tech.value(a)), np.asarray(tech.value(b))
    d1a, d1b = np.asarray(tech.derivative(a)), np.asarray(tech.derivative(b))
    d2a = np.asarray(tech.second_derivative(a))
    k = spec.r + phi_a + phi_b
    with np.errstate(divide="ignore", invalid="ignore"):
        own = spec.T * (spec.r + 2.0 * phi_b) * (d2a / k**2 - 2.0 * d1a**2 / k**3)
        opp = 2.0 * spec.T * d1a * d1b * (phi_a - phi_b) / k**3
    return _unwrap(own), _unwrap(opp)


def payoff(i: int, s: StrategyProfile, spec: GameSpec) -> float:
    _check_player(i, s.n)
    row = s.efforts[i]
    col = s.efforts[:, i]
    linked = (row + col) > 0
    linked[i] = False
    revenue = 0.0
    if linked.any():
        phi_row = np.asarray(spec.technology.value(row[linked]))
        phi_col = np.asarray(spec.technology.value(col[linked]))
        revenue = float(np.sum(spec.T * (phi_row - phi_col) / (phi_row + phi_col + spec.r)))
    return revenue - float(spec.cost.value(row.sum()))


def payoffs(s: StrategyProfile, spec: GameSpec) -> np.ndarray:
    return revenue_matrix(s.efforts, spec).sum(axis=1) - np.asarray(spec.cost.value(s.totals))


def payoff_gradient(
    i: int,
    s: StrategyProfile,
    spec: GameSpec,
    targets: Optional[Iterable[int]] = None,
) -> np.ndarray:
    """
    Gradient of pi_i in i's row.

    Entries for players outside ``targets`` (default: everyone but i) are left at 0.

    Raises:
        SingularContestError: an evaluated pair sits at (0, 0) while r = 0
    """
    _check_player(i, s.n)
    idx = np.array(
        [j for j in range(s.n) if j != i] if targets is None else sorted(set(targets) - {i}),
        dtype=int,
    )
    out = np.zeros(s.n)
    if idx.size == 0:
        return out
    own = s.efforts[i, idx]
    opp = s.efforts[idx, i]
    if spec.r == 0.0:
        singular = idx[(own == 0.0) & (opp == 0.0)]
        if singular.size:
            raise SingularContestError(i, int(singular[0]))
    marginal = np.asarray(marginal_revenue(own, opp, spec))
    out[idx] = marginal - float(spec.cost.derivative(s.efforts[i].sum()))
    return out


def gradient_field(s: StrategyProfile, g: Structure, spec: GameSpec) -> np.ndarray:
    """J(s): every player's row gradient, zero off the edge mask of g."""
    if g.n != s.n:
        raise InvalidInputError(f"structure has {g.n} players, profile has {s.n}")
    mask = g.adjacency
    efforts = s.efforts
    if spec.r == 0.0:
        singular = mask & (efforts == 0.0) & (efforts.T == 0.0)
        if singular.any():
            i, j = np.argwhere(singular)[0]
            raise SingularContestError(int(i), int(j))
    field_ = np.zeros_like(efforts)
    if mask.any():
        marginal = np.asarray(marginal_revenue(efforts, efforts.T, spec))
        slope = np.asarray(spec.cost.derivative(s.totals))
        field_[mask] = (marginal - slope[:, None])[mask]
    return field_


def induced_structure(s: StrategyProfile) -> Structure:
    linked = (s.efforts + s.efforts.T) > 0
    edges = frozenset((int(i), int(j)) for i, j in np.argwhere(np.triu(linked, k=1)))
    return Structure(s.n, edges)
