"""
Exception hierarchy for contestnet.

Library code raises these; only the CLI turns them into exit codes.
"""
from typing import Optional, Sequence


class ContestNetError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 2


class InvalidInputError(ContestNetError, ValueError):
    """Arguments outside the admissible domain."""

    exit_code = 1


class UsageError(InvalidInputError):
    """Bad command line."""


class ScenarioError(InvalidInputError):
    """Malformed scenario file, with the offending line or field."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.field = field
        self.line = line


class SingularContestError(ContestNetError):
    """Revenue gradient requested at s_ij = s_ji = 0 with r = 0."""

    def __init__(self, i: int, j: int):
        super().__init__(f"contest ({i}, {j}) is singular: both efforts and r are zero")
        self.pair = (i, j)


class ConvergenceError(ContestNetError):
    """An iterative method ran out of budget."""

    def __init__(self, message: str, best_residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (best residual {best_residual:.3e} after {iterations} iterations)")
        self.best_residual = best_residual
        self.iterations = iterations


class BracketingError(ConvergenceError):
    """A root could not be bracketed."""


class AmbiguousPartitionError(ContestNetError):
    """Totals chain across the grouping tolerance, so classes are not well defined."""

    def __init__(self, players: Sequence[int], tol_rel: float):
        super().__init__(
            f"players {list(players)} straddle the class tolerance {tol_rel:g}; grouping is ambiguous"
        )
        self.players = list(players)
        self.tol_rel = tol_rel
