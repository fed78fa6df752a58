"""Value types and the expression tree of the testable requirement language."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Union

__all__ = [
    "String",
    "Number",
    "Boolean",
    "Time",
    "TimeRange",
    "TimeRangeSet",
    "StringList",
    "Value",
    "Comparator",
    "AtomicClause",
    "And",
    "Or",
    "Not",
    "Expr",
    "Rule",
    "RuleSet",
    "ParseDiagnostic",
    "atoms",
    "base_key",
]

_SUFFIX = re.compile(r"\d+$")


def base_key(key: str) -> str:
    """Strip a trailing numeric suffix (``Time2`` -> ``Time``)."""
    stripped = _SUFFIX.sub("", key)
    return stripped or key


@dataclass(frozen=True)
class String:
    text: str


@dataclass(frozen=True)
class Number:
    value: Decimal

    def __post_init__(self):
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))
        if not self.value.is_finite():
            raise ValueError(f"number literal must be finite, got {self.value}")


@dataclass(frozen=True)
class Boolean:
    value: bool


@dataclass(frozen=True, order=True)
class Time:
    hour: int
    minute: int
    second: int = 0

    def __post_init__(self):
        if not (0 <= self.hour <= 23 and 0 <= self.minute <= 59 and 0 <= self.second <= 59):
            raise ValueError(f"time out of range: {self.hour}:{self.minute}:{self.second}")

    @property
    def seconds(self) -> int:
        return self.hour * 3600 + self.minute * 60 + self.second

    @classmethod
    def from_seconds(cls, seconds: int) -> Time:
        if not 0 <= seconds < 86400:
            raise ValueError(f"seconds outside one day: {seconds}")
        return cls(seconds // 3600, seconds % 3600 // 60, seconds % 60)

    def __str__(self) -> str:
        if self.second:
            return f"{self.hour:02d}:{self.minute:02d}:{self.second:02d}"
        return f"{self.hour:02d}:{self.minute:02d}"


@dataclass(frozen=True)
class TimeRange:
    start: Time
    end: Time

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"time range start {self.start} must precede end {self.end}")

    def __contains__(self, t: Time) -> bool:
        return self.start <= t <= self.end

    def __str__(self) -> str:
        return f"{self.start}-{self.end}"


@dataclass(frozen=True)
class TimeRangeSet:
    """Ordered, non-overlapping set of inclusive time ranges."""

    ranges: tuple[TimeRange, ...]

    def __post_init__(self):
        ranges = tuple(sorted(self.ranges, key=lambda r: (r.start, r.end)))
        if not ranges:
            raise ValueError("time-range set must not be empty")
        for a, b in zip(ranges, ranges[1:]):
            if b.start <= a.end:
                raise ValueError(f"overlapping time ranges {a} and {b}")
        object.__setattr__(self, "ranges", ranges)

    def __contains__(self, t: Time) -> bool:
        return any(t in r for r in self.ranges)


@dataclass(frozen=True)
class StringList:
    items: tuple[str, ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("string list must not be empty")


Value = Union[String, Number, Boolean, Time, TimeRangeSet, StringList]


class Comparator(enum.Enum):
    EQ = "="
    NEQ = "!="
    GT = ">"
    GE = ">="
    LT = "<"
    LE = "<="
    IN = "in"

    @property
    def symbol(self) -> str:
        return self.value


@dataclass(frozen=True)
class AtomicClause:
    key: str
    comparator: Comparator
    value: Value
    modulus: Decimal | None = None

    def __post_init__(self):
        if not self.key or not self.key[0].isupper():
            raise ValueError(f"key must start with an uppercase letter: {self.key!r}")
        if self.modulus is not None:
            if not isinstance(self.modulus, Decimal):
                object.__setattr__(self, "modulus", Decimal(str(self.modulus)))
            if self.modulus <= 0:
                raise ValueError("modulus must be positive")
            if self.comparator not in (Comparator.EQ, Comparator.NEQ):
                raise ValueError("modulo clauses only support = and !=")
            if not isinstance(self.value, Number):
                raise ValueError("modulo clauses compare against a number")
        if self.comparator is Comparator.IN:
            if not isinstance(self.value, (TimeRangeSet, StringList)):
                raise ValueError("'in' requires a time-range set or a string list")
        elif isinstance(self.value, (TimeRangeSet, StringList)):
            raise ValueError("list values require the 'in' comparator")

    @property
    def base_key(self) -> str:
        return base_key(self.key)


@dataclass(frozen=True)
class And:
    children: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("conjunction needs at least two operands")


@dataclass(frozen=True)
class Or:
    children: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("disjunction needs at least two operands")


@dataclass(frozen=True)
class Not:
    child: Expr


Expr = Union[AtomicClause, And, Or, Not]


def atoms(expr: Expr) -> list[AtomicClause]:
    """All atomic clauses of *expr* in left-to-right order."""
    if isinstance(expr, AtomicClause):
        return [expr]
    if isinstance(expr, Not):
        return atoms(expr.child)
    out: list[AtomicClause] = []
    for child in expr.children:
        out.extend(atoms(child))
    return out


@dataclass(frozen=True)
class Rule:
    id: int
    condition: Expr
    outcome: Expr
    source_span: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.id < 1:
            raise ValueError("rule ids are positive integers")
        if not _outcome_ok(self.outcome):
            raise ValueError("outcome may only combine clauses with 'and'")


def _outcome_ok(expr: Expr) -> bool:
    if isinstance(expr, AtomicClause):
        return True
    if isinstance(expr, And):
        return all(_outcome_ok(c) for c in expr.children)
    return False


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()
    source_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        ids = [r.id for r in self.rules]
        if len(ids) != len(set(ids)):
            raise ValueError("rule ids must be unique within a rule set")

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def get(self, rule_id: int) -> Rule | None:
        for r in self.rules:
            if r.id == rule_id:
                return r
        return None


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    expected: tuple[str, ...] = ()
    severity: str = "error"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.severity}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text
