"""Direct predicate evaluation of conditions against flat assignment maps.

This is the reference semantics used to check generated suites and to
compute scenario coverage.  It deliberately shares no code with the test
generator.

An atom on key ``K`` sees every assignment whose suffix-stripped key is
``K`` (so ``Action``, ``Action2`` and ``Action3`` all feed ``Action = ...``).
``!=`` and modulo-``!=`` must hold for all of those values; every other
comparator needs at least one.  An atom whose key is absent is false.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from typing import Any, Mapping

from .model import (
    And,
    AtomicClause,
    Boolean,
    Comparator,
    Expr,
    Not,
    Number,
    Or,
    String,
    StringList,
    Time,
    TimeRangeSet,
    base_key,
)

_TIME = re.compile(r"\s*(\d{1,2}):(\d{2})(?::(\d{2}))?\s*")


def _as_decimal(v: Any) -> Decimal | None:
    if isinstance(v, Number):
        return v.value
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, Decimal)):
        return Decimal(v)
    if isinstance(v, float):
        return Decimal(repr(v))
    if isinstance(v, (str, String)):
        text = v.text if isinstance(v, String) else v
        try:
            d = Decimal(text.strip().replace(",", ""))
        except InvalidOperation:
            return None
        return d if d.is_finite() else None
    return None


def _as_time(v: Any) -> Time | None:
    if isinstance(v, Time):
        return v
    text = v.text if isinstance(v, String) else v
    if isinstance(text, str):
        m = _TIME.fullmatch(text)
        if m:
            try:
                return Time(int(m.group(1)), int(m.group(2)), int(m.group(3) or 0))
            except ValueError:
                return None
    return None


def _as_text(v: Any) -> str:
    if isinstance(v, String):
        return v.text
    if isinstance(v, Boolean) or isinstance(v, bool):
        b = v.value if isinstance(v, Boolean) else v
        return "true" if b else "false"
    if isinstance(v, Number):
        return format(v.value.normalize(), "f")
    return str(v).strip()


def _as_bool(v: Any) -> bool | None:
    if isinstance(v, Boolean):
        return v.value
    if isinstance(v, bool):
        return v
    if isinstance(v, (str, String)):
        text = _as_text(v).lower()
        if text in ("true", "false"):
            return text == "true"
    return None


def _compare(a, b, cmp: Comparator) -> bool:
    if cmp is Comparator.EQ:
        return a == b
    if cmp is Comparator.NEQ:
        return a != b
    if cmp is Comparator.GT:
        return a > b
    if cmp is Comparator.GE:
        return a >= b
    if cmp is Comparator.LT:
        return a < b
    if cmp is Comparator.LE:
        return a <= b
    raise ValueError(cmp)


def _single(atom: AtomicClause, v: Any) -> bool:
    target = atom.value
    cmp = atom.comparator
    if atom.modulus is not None:
        d = _as_decimal(v)
        if d is None:
            return False
        m = atom.modulus
        remainder = d - m * (d / m).to_integral_value(rounding="ROUND_FLOOR")
        return _compare(remainder, target.value, cmp)
    if isinstance(target, TimeRangeSet):
        t = _as_time(v)
        return t is not None and t in target
    if isinstance(target, StringList):
        return _as_text(v) in target.items
    if isinstance(target, Number):
        d = _as_decimal(v)
        return d is not None and _compare(d, target.value, cmp)
    if isinstance(target, Time):
        t = _as_time(v)
        return t is not None and _compare(t, target, cmp)
    if isinstance(target, Boolean):
        b = _as_bool(v)
        if b is None or cmp not in (Comparator.EQ, Comparator.NEQ):
            return False
        return _compare(b, target.value, cmp)
    if cmp not in (Comparator.EQ, Comparator.NEQ):
        return False
    return _compare(_as_text(v), target.text, cmp)


def atom_holds(atom: AtomicClause, assignments: Mapping[str, Any]) -> bool:
    group = base_key(atom.key)
    values = [v for k, v in assignments.items() if k != "id" and base_key(k) == group]
    if not values:
        return False
    if atom.comparator is Comparator.NEQ:
        return all(_single(atom, v) for v in values)
    return any(_single(atom, v) for v in values)


def satisfies(expr: Expr, assignments: Mapping[str, Any]) -> bool:
    if isinstance(expr, AtomicClause):
        return atom_holds(expr, assignments)
    if isinstance(expr, Not):
        return not satisfies(expr.child, assignments)
    if isinstance(expr, And):
        return all(satisfies(c, assignments) for c in expr.children)
    if isinstance(expr, Or):
        return any(satisfies(c, assignments) for c in expr.children)
    raise TypeError(f"not an expression: {expr!r}")
