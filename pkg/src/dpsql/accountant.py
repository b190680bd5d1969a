"""Privacy budget under basic (additive) sequential composition."""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from pathlib import Path

from dpsql.errors import BudgetExhausted, ConfigError

LEDGER_COLUMNS = ("fingerprint", "epsilon", "delta", "mechanism", "outcome")


@dataclasses.dataclass(frozen=True)
class LedgerEntry:
    fingerprint: str
    epsilon: float
    delta: float
    mechanism: str
    outcome: str = "answered"
    timestamp: float = 0.0
    composition: str = "sequential"  # "parallel" when one charge covers disjoint bins


class Budget:
    """Running (epsilon, delta) spend against fixed totals."""

    def __init__(self, epsilon_total: float, delta_total: float = 0.0):
        if not (math.isfinite(epsilon_total) and epsilon_total > 0):
            raise ValueError("epsilon_total must be a positive finite number")
        if not (0 <= delta_total < 1):
            raise ValueError("delta_total must lie in [0, 1)")
        self.epsilon_total = float(epsilon_total)
        self.delta_total = float(delta_total)
        self.ledger: list[LedgerEntry] = []

    @property
    def epsilon_spent(self) -> float:
        return math.fsum(e.epsilon for e in self.ledger)

    @property
    def delta_spent(self) -> float:
        return math.fsum(e.delta for e in self.ledger)

    @property
    def epsilon_remaining(self) -> float:
        return self.epsilon_total - self.epsilon_spent

    def can_afford(self, eps: float, delta: float = 0.0) -> bool:
        eps_after = math.fsum([e.epsilon for e in self.ledger] + [eps])
        delta_after = math.fsum([e.delta for e in self.ledger] + [delta])
        return eps_after <= self.epsilon_total and delta_after <= self.delta_total

    def charge(
        self,
        eps: float,
        delta: float = 0.0,
        fingerprint: str = "",
        mechanism: str = "",
        outcome: str = "answered",
        composition: str = "sequential",
        timestamp: float | None = None,
    ) -> "Budget":
        """Append one ledger entry or raise BudgetExhausted leaving everything untouched."""
        if not (isinstance(eps, (int, float)) and math.isfinite(eps) and eps > 0):
            raise ValueError(f"epsilon charge must be positive and finite, got {eps!r}")
        if not (isinstance(delta, (int, float)) and 0 <= delta < 1):
            raise ValueError(f"delta charge must lie in [0, 1), got {delta!r}")
        if composition not in ("sequential", "parallel"):
            raise ValueError(f"unknown composition {composition!r}")
        if not self.can_afford(eps, delta):
            raise BudgetExhausted(
                f"charging eps={eps:g} delta={delta:g} exceeds the remaining "
                f"eps={self.epsilon_remaining:g} delta={self.delta_total - self.delta_spent:g}"
            )
        entry = LedgerEntry(
            fingerprint, float(eps), float(delta), mechanism, outcome,
            time.time() if timestamp is None else timestamp, composition,
        )
        self.ledger.append(entry)
        return self

    def snapshot(self) -> tuple:
        return (self.epsilon_total, self.delta_total, tuple(self.ledger))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LEDGER_COLUMNS)
            for e in self.ledger:
                w.writerow([e.fingerprint, repr(e.epsilon), repr(e.delta), e.mechanism, e.outcome])

    def append_csv(self, path: str | Path, entries: list[LedgerEntry]) -> None:
        p = Path(path)
        new = not p.exists() or p.stat().st_size == 0
        with open(p, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(LEDGER_COLUMNS)
            for e in entries:
                w.writerow([e.fingerprint, repr(e.epsilon), repr(e.delta), e.mechanism, e.outcome])

    @classmethod
    def from_csv(cls, path: str | Path, epsilon_total: float, delta_total: float = 0.0) -> "Budget":
        """Rebuild a budget from an exported ledger; missing file means nothing spent."""
        budget = cls(epsilon_total, delta_total)
        p = Path(path)
        if not p.exists():
            return budget
        with open(p, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != LEDGER_COLUMNS:
                raise ConfigError(f"{p}: ledger header must be {','.join(LEDGER_COLUMNS)}")
            for row in reader:
                try:
                    eps, delta = float(row["epsilon"]), float(row["delta"])
                except ValueError:
                    raise ConfigError(f"{p}: bad ledger row {row}") from None
                budget.ledger.append(
                    LedgerEntry(row["fingerprint"], eps, delta, row["mechanism"], row["outcome"])
                )
        if budget.epsilon_spent > budget.epsilon_total or budget.delta_spent > budget.delta_total:
            raise BudgetExhausted(f"{p}: ledger already exceeds the configured totals")
        return budget


def charge(budget: Budget, eps: float, delta: float = 0.0, **entry) -> Budget:
    return budget.charge(eps, delta, **entry)
