from __future__ import annotations

import dataclasses
import datetime as dt
import json
from typing import Any

from dpsql.sensitivity import SensitivityBound


@dataclasses.dataclass(frozen=True)
class SanitizedResult:
    """A released answer plus how it was produced."""

    kind: str  # "scalar" | "histogram"
    value: float | None
    bins: tuple[tuple[Any, float], ...]
    epsilon: float
    delta: float
    mechanism: str
    sensitivity: SensitivityBound
    noise_scale: float
    seed: int
    fingerprint: str
    query_class: str
    suppressed_bin_count: int = 0
    threshold: float | None = None
    partition_mean: float | None = None
    partitions: int | None = None

    def as_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "mechanism": self.mechanism,
            "query_class": self.query_class,
            "charged": {"epsilon": self.epsilon, "delta": self.delta},
            "sensitivity": {
                "value": self.sensitivity.value if self.sensitivity.bounded else None,
                "kind": self.sensitivity.kind.value,
                "unit": self.sensitivity.unit.value,
            },
            "noise_scale": self.noise_scale,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
        }
        if self.kind == "scalar":
            d["value"] = self.value
        else:
            d["bins"] = [[_category(c), v] for c, v in self.bins]
            d["suppressed_bin_count"] = self.suppressed_bin_count
        if self.threshold is not None:
            d["threshold"] = self.threshold
        if self.partition_mean is not None:
            d["partition_mean"] = self.partition_mean
            d["partitions"] = self.partitions
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def bin_dict(self) -> dict:
        return dict(self.bins)


def _category(c):
    if isinstance(c, dt.date):
        return c.isoformat()
    if isinstance(c, tuple):
        return [_category(x) for x in c]
    return c
