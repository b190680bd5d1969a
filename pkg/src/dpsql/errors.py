"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations

import enum


class DpSqlError(Exception):
    """Base class for all engine errors."""


# -- catalog -----------------------------------------------------------------

class CatalogError(DpSqlError):
    pass


class MalformedCatalog(CatalogError):
    pass


class InvalidReference(CatalogError):
    pass


class InvalidRange(CatalogError):
    pass


class AmbiguousPid(CatalogError):
    """A table reaches two distinct PID-owning ancestors through foreign keys."""


# -- SQL frontend ------------------------------------------------------------

class SqlSyntaxError(DpSqlError):
    def __init__(self, message: str, position: int, token: str | None = None):
        self.position = position
        self.token = token
        where = f" at position {position}"
        if token is not None:
            where += f" near {token!r}"
        super().__init__(message + where)


class UnsupportedFeature(DpSqlError):
    def __init__(self, feature: str, position: int | None = None):
        self.feature = feature
        self.position = position
        super().__init__(f"unsupported SQL feature: {feature}")


class ResolutionError(DpSqlError):
    pass


class UnknownTable(ResolutionError):
    pass


class UnknownColumn(ResolutionError):
    pass


class AmbiguousColumn(ResolutionError):
    pass


# -- execution ---------------------------------------------------------------

class ExecutionError(DpSqlError):
    pass


class TypeMismatch(ExecutionError):
    pass


class EmptyAggregate(ExecutionError):
    """AVG/MIN/MAX evaluated over zero rows."""


AvgOfEmpty = EmptyAggregate


class DataLoadError(DpSqlError):
    pass


class NoPidPath(DpSqlError):
    pass


# -- sensitivity / mechanisms -------------------------------------------------

class UnsupportedAggregate(DpSqlError):
    pass


class UnknownTransformation(DpSqlError):
    pass


class DomainTooLarge(DpSqlError):
    pass


class InvalidScale(ValueError, DpSqlError):
    pass


class MissingRange(DpSqlError):
    pass


class InvalidParams(ValueError, DpSqlError):
    """Privacy parameters violate their invariants."""


class BudgetExhausted(DpSqlError):
    pass


class RejectReason(str, enum.Enum):
    UNBOUNDED_SENSITIVITY = "UnboundedSensitivity"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    UNSUPPORTED = "Unsupported"
    NO_SUPPRESSOR = "NoSuppressor"
    DEGENERATE_DENOMINATOR = "DegenerateDenominator"
    K_ANONYMITY = "KAnonymity"
    MISSING_RANGE = "MissingRange"
    EMPTY_AGGREGATE = "EmptyAggregate"


_REASON_TEXT = {
    RejectReason.UNBOUNDED_SENSITIVITY: "unbounded sensitivity",
    RejectReason.BUDGET_EXHAUSTED: "budget exhausted",
    RejectReason.UNSUPPORTED: "unsupported",
    RejectReason.NO_SUPPRESSOR: "no histogram suppressor configured",
    RejectReason.DEGENERATE_DENOMINATOR: "degenerate denominator",
    RejectReason.K_ANONYMITY: "too few targeted users",
    RejectReason.MISSING_RANGE: "missing attribute range",
    RejectReason.EMPTY_AGGREGATE: "aggregate over empty selection",
}


class RejectedQuery(DpSqlError):
    """The engine refuses to release an answer for this query."""

    def __init__(self, reason: RejectReason, detail: str = ""):
        self.reason = RejectReason(reason)
        self.detail = detail
        text = _REASON_TEXT[self.reason]
        super().__init__(f"{text}: {detail}" if detail else text)


# -- metrics / bench ---------------------------------------------------------

class ZeroTrueValue(ValueError, DpSqlError):
    pass


class EmptyTrueHistogram(ValueError, DpSqlError):
    pass


class ConfigError(DpSqlError):
    pass
