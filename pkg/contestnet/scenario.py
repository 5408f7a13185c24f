"""
Scenario files: one JSON document describing the structure and the primitives.

    {"n": 12, "partition_sizes": [10, 2],
     "phi": {"kind": "linear", "lambda": 1.0},
     "cost": {"k1": 0.0, "k2": 1.0, "alpha": 2.0},
     "r": 0.0, "T": 1.0}
"""
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from contestnet.errors import InvalidInputError, ScenarioError
from contestnet.model import ContestParams, CostSpec, GameSpec, Structure, TechnologySpec


class PhiConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["linear", "power"] = "linear"
    scale: float = Field(1.0, alias="lambda", gt=0)
    beta: float = Field(1.0, gt=0, le=1)


class CostConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k1: float = Field(0.0, ge=0)
    k2: float = Field(1.0, gt=0)
    alpha: float = Field(2.0, gt=1)


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    n: Optional[int] = Field(None, ge=0)
    edges: Optional[List[Tuple[int, int]]] = None
    partition_sizes: Optional[List[int]] = None
    phi: PhiConfig = Field(default_factory=PhiConfig)
    cost: CostConfig = Field(default_factory=CostConfig)
    r: float = Field(0.0, ge=0)
    T: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _one_structure(self) -> "Scenario":
        if (self.edges is None) == (self.partition_sizes is None):
            raise ValueError("exactly one of 'edges' or 'partition_sizes' is required")
        if self.edges is not None and self.n is None:
            raise ValueError("'n' is required with 'edges'")
        if self.partition_sizes is not None:
            if not self.partition_sizes or any(m <= 0 for m in self.partition_sizes):
                raise ValueError("'partition_sizes' must be a nonempty list of positive integers")
            total = sum(self.partition_sizes)
            if self.n is not None and self.n != total:
                raise ValueError(f"'n'={self.n} does not match sum of partition_sizes={total}")
        if self.phi.kind == "linear" and self.phi.beta != 1.0:
            raise ValueError("linear phi fixes beta at 1")
        return self

    @property
    def player_count(self) -> int:
        return sum(self.partition_sizes) if self.n is None else self.n

    def structure(self) -> Structure:
        try:
            if self.partition_sizes is not None:
                return Structure.complete_multipartite(self.partition_sizes)
            return Structure.from_edges(self.player_count, self.edges or [])
        except InvalidInputError as e:
            raise ScenarioError(str(e), field="edges") from e

    def game_spec(self) -> GameSpec:
        return GameSpec(
            technology=TechnologySpec(kind=self.phi.kind, scale=self.phi.scale, exponent=self.phi.beta),
            cost=CostSpec(k1=self.cost.k1, k2=self.cost.k2, alpha=self.cost.alpha),
            params=ContestParams(r=self.r, T=self.T),
        )

    @classmethod
    def from_game(cls, structure: Structure, spec: GameSpec) -> "Scenario":
        phi = PhiConfig(kind=spec.technology.kind, scale=spec.technology.scale, beta=spec.technology.exponent)
        cost = CostConfig(k1=spec.cost.k1, k2=spec.cost.k2, alpha=spec.cost.alpha)
        if structure.partition_sizes is not None:
            return cls(n=structure.n, partition_sizes=list(structure.partition_sizes),
                       phi=phi, cost=cost, r=spec.r, T=spec.T)
        return cls(n=structure.n, edges=[list(e) for e in structure.sorted_edges],
                   phi=phi, cost=cost, r=spec.r, T=spec.T)


def parse_scenario(text: str) -> Scenario:
    """
    Parse scenario JSON text.

    Raises:
        ScenarioError: with the line of a syntax error or the dotted path of an invalid field
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e.msg} (column {e.colno})", line=e.lineno) from e
    try:
        return Scenario.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise ScenarioError(first["msg"], field=field) from e


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file {path}: {e.strerror}") from e
    return parse_scenario(text)
