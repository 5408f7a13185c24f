"""
Result documents: JSON with dense row-major effort arrays, CSV with (i, j, s_ij) triples.

Floats in CSV are written with 17 significant digits so that profiles re-parse exactly.
"""
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel

from contestnet.errors import InvalidInputError
from contestnet.model import StrategyProfile, payoffs
from contestnet.scenario import Scenario
from contestnet.solver import EquilibriumResult

FORMATS = ("json", "csv")


def format_float(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def to_json(document: Any) -> str:
    """Deterministic JSON text for dicts, lists and pydantic models."""
    if isinstance(document, BaseModel):
        document = document.model_dump(mode="json", by_alias=True)
    return json.dumps(document, indent=2) + "\n"


def rows_to_csv(rows: Iterable[Mapping[str, Any]], columns: Optional[List[str]] = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(row.get(column)) for column in columns])
    return buffer.getvalue()


def equilibrium_document(eq: EquilibriumResult) -> Dict[str, Any]:
    return {
        "scenario": Scenario.from_game(eq.structure, eq.spec).model_dump(mode="json", by_alias=True),
        "method": eq.method,
        "reduced": eq.reduced,
        "residual": eq.residual,
        "iterations": eq.iterations,
        "cost_shock": list(eq.cost_shock) if eq.cost_shock else None,
        "interior": eq.is_interior,
        "efforts": eq.profile.to_list(),
        "totals": eq.totals.tolist(),
        "w_star": eq.w_star,
        "payoffs": eq.payoffs.tolist(),
    }


def equilibrium_csv(eq: EquilibriumResult) -> str:
    """One (i, j, s_ij) row per directed contest of the structure."""
    s = eq.profile.efforts
    rows = [
        {"i": i, "j": j, "s_ij": float(s[i, j])}
        for a, b in eq.structure.sorted_edges
        for i, j in ((a, b), (b, a))
    ]
    return rows_to_csv(rows, ["i", "j", "s_ij"])


def profile_from_document(document: Mapping[str, Any]) -> StrategyProfile:
    if "efforts" not in document:
        raise InvalidInputError("result document has no 'efforts' array")
    return StrategyProfile(np.asarray(document["efforts"], dtype=float))


def profile_from_csv(text: str, n: int) -> StrategyProfile:
    efforts = np.zeros((n, n))
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["i", "j", "s_ij"]:
        raise InvalidInputError(f"expected columns i,j,s_ij, got {reader.fieldnames}")
    for row in reader:
        efforts[int(row["i"]), int(row["j"])] = float(row["s_ij"])
    return StrategyProfile(efforts)


def replay_document(document: Mapping[str, Any]) -> float:
    """Largest gap between stored payoffs and payoffs recomputed from the stored profile."""
    scenario = Scenario.model_validate(document["scenario"])
    recomputed = payoffs(profile_from_document(document), scenario.game_spec())
    return float(np.max(np.abs(recomputed - np.asarray(document["payoffs"])), initial=0.0))


def write_output(text: str, path: Optional[Union[str, Path]] = None):
    """Write to the given file, or to stdout when no path is set."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text)
