from __future__ import annotations

import dataclasses
import math
from typing import Any


@dataclasses.dataclass(frozen=True)
class ExactResult:
    """Exact answer of a query: a scalar, a histogram or materialised rows."""

    kind: str  # "scalar" | "histogram" | "rows"
    scalar: float | int | None = None
    histogram: tuple[tuple[Any, float | int], ...] = ()
    rows: tuple[tuple, ...] = ()
    columns: tuple[str, ...] = ()

    @classmethod
    def of_scalar(cls, value) -> "ExactResult":
        return cls("scalar", scalar=value)

    @classmethod
    def of_histogram(cls, bins) -> "ExactResult":
        return cls("histogram", histogram=tuple(bins))

    @classmethod
    def of_rows(cls, columns, rows) -> "ExactResult":
        return cls("rows", rows=tuple(rows), columns=tuple(columns))

    def as_dict(self) -> dict:
        return dict(self.histogram)

    def matches(self, other: "ExactResult", rel_tol: float = 1e-9) -> bool:
        """Equality with a relative tolerance on real values; counts stay exact."""
        if self.kind != other.kind:
            return False
        if self.kind == "scalar":
            return _close(self.scalar, other.scalar, rel_tol)
        if self.kind == "histogram":
            if [c for c, _ in self.histogram] != [c for c, _ in other.histogram]:
                return False
            return all(_close(a, b, rel_tol) for (_, a), (_, b) in zip(self.histogram, other.histogram))
        return self.columns == other.columns and sorted(self.rows, key=repr) == sorted(other.rows, key=repr)


def _close(a, b, rel_tol) -> bool:
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    return math.isclose(a, b, rel_tol=rel_tol, abs_tol=1e-12)
