from __future__ import annotations

import dataclasses
import enum
import math

from dpsql.errors import InvalidParams

SEED_MASK = (1 << 64) - 1


class Mechanism(str, enum.Enum):
    LAPLACE_GS = "LaplaceGS"
    LAPLACE_ELASTIC = "LaplaceElastic"
    SAA = "SAA"
    BOUNDED_SUM = "BoundedSum"


class Suppressor(str, enum.Enum):
    TAU_THRESHOLD = "TauThreshold"
    STICKY_THRESHOLD = "StickyThreshold"
    NONE = "None"


DEFAULT_SAA_PARTITIONS = 10


def _lookup(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    for member in enum_cls:
        if str(value).lower() in (member.value.lower(), member.name.lower()):
            return member
    raise InvalidParams(f"unknown {enum_cls.__name__} {value!r}")


@dataclasses.dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = 0.0
    seed: int = 0
    mechanism: Mechanism = Mechanism.LAPLACE_GS
    histogram_suppressor: Suppressor = Suppressor.NONE
    tau: float | None = None
    saa_partitions: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mechanism", _lookup(Mechanism, self.mechanism))
        object.__setattr__(
            self, "histogram_suppressor", _lookup(Suppressor, self.histogram_suppressor)
        )
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParams(f"epsilon must be positive and finite, got {self.epsilon!r}")
        if not (0 <= self.delta < 1):
            raise InvalidParams(f"delta must lie in [0, 1), got {self.delta!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed <= SEED_MASK):
            raise InvalidParams("seed must be an unsigned 64-bit integer")
        if self.tau is not None and not (math.isfinite(self.tau) and self.tau > 0):
            raise InvalidParams(f"tau must be positive, got {self.tau!r}")
        if self.saa_partitions is not None and self.saa_partitions < 2:
            raise InvalidParams("saa_partitions must be at least 2")

    @property
    def partitions(self) -> int:
        return self.saa_partitions or DEFAULT_SAA_PARTITIONS

    def replace(self, **changes) -> "PrivacyParams":
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True)
class KAnonParams:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise InvalidParams(f"k must be an integer >= 1, got {self.k!r}")
