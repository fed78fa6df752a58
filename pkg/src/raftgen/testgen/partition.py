"""Equivalence classes and boundary values for single clauses."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping, Sequence, Union

from ..trl import (
    AtomicClause,
    Boolean,
    Comparator,
    Not,
    Number,
    String,
    StringList,
    Time,
    TimeRangeSet,
    base_key,
    render_expr,
)

Literal = Union[AtomicClause, Not]

MINUTE = 60
SENTINEL_PREFIX = "NOT_"


class PartitionError(ValueError):
    """A clause admits no valid value inside its declared domain."""


@dataclass(frozen=True)
class Domains:
    """Value-domain configuration for test generation.

    ``enums`` and ``bounds`` are keyed by clause key or suffix-stripped key.
    ``deltas`` may also be keyed by semantic type (``number``, ``price``)
    and ``time_step`` is in seconds.
    """

    enums: Mapping[str, Sequence[str]] = field(default_factory=dict)
    bounds: Mapping[str, tuple] = field(default_factory=dict)
    deltas: Mapping[str, Decimal] = field(default_factory=dict)
    time_step: int = MINUTE
    nonnegative: bool = True
    failure_value: str = "Failure"

    def lookup(self, table: Mapping, key: str):
        return table.get(key, table.get(base_key(key)))


@dataclass(frozen=True)
class Partition:
    """Representatives of one literal.

    Every value in ``valid_reps`` and ``boundary_reps`` satisfies the literal
    and every value in ``invalid_reps`` violates it.  ``valid_reps[0]`` is
    the primary representative used in positive cases.
    """

    atom: Literal
    kind: str
    valid_reps: tuple = ()
    invalid_reps: tuple = ()
    boundary_reps: tuple = ()


def literal_atom(lit: Literal) -> AtomicClause:
    return lit.child if isinstance(lit, Not) else lit


def value_kind(atom: AtomicClause) -> str:
    if atom.modulus is not None:
        return "modulo"
    v = atom.value
    if isinstance(v, Number):
        return "numeric-interval"
    if isinstance(v, (Time, TimeRangeSet)):
        return "time"
    if isinstance(v, Boolean):
        return "boolean"
    return "enum"


def numeric_delta(atom: AtomicClause, symbols, domains: Domains) -> Decimal:
    explicit = domains.lookup(domains.deltas, atom.key)
    if explicit is not None:
        return Decimal(str(explicit))
    words = base_key(atom.key).lower()
    if "price" in words:
        default = Decimal(domains.deltas.get("price", "0.01"))
    else:
        default = Decimal(domains.deltas.get("number", "1"))
    exps = [atom.value.value.as_tuple().exponent] if isinstance(atom.value, Number) else []
    if atom.modulus is not None:
        exps.append(atom.modulus.as_tuple().exponent)
    finest = min([0, *exps])
    return min(default, Decimal(1).scaleb(finest))


def _bounds(atom: AtomicClause, domains: Domains) -> tuple[Decimal | None, Decimal | None]:
    lo, hi = domains.lookup(domains.bounds, atom.key) or (None, None)
    lo = Decimal(str(lo)) if lo is not None else (Decimal(0) if domains.nonnegative else None)
    hi = Decimal(str(hi)) if hi is not None else None
    return lo, hi


def _in_bounds(x: Decimal, lo, hi) -> bool:
    return (lo is None or x >= lo) and (hi is None or x <= hi)


def _companion_bounds(companions: Sequence[Literal], delta: Decimal):
    lo = hi = None
    for lit in companions:
        if isinstance(lit, Not) or lit.modulus is not None or not isinstance(lit.value, Number):
            continue
        v, c = lit.value.value, lit.comparator
        if c in (Comparator.GE, Comparator.GT, Comparator.EQ):
            cand = v + delta if c is Comparator.GT else v
            lo = cand if lo is None else max(lo, cand)
        if c in (Comparator.LE, Comparator.LT, Comparator.EQ):
            cand = v - delta if c is Comparator.LT else v
            hi = cand if hi is None else min(hi, cand)
    return lo, hi


def _ceil_to(x: Decimal, m: Decimal, r: Decimal) -> Decimal:
    """Smallest y >= x with y mod m == r (floor remainder)."""
    k = ((x - r) / m).to_integral_value(rounding="ROUND_CEILING")
    return k * m + r


def _numeric(atom: AtomicClause, symbols, domains: Domains, companions) -> Partition:
    d = numeric_delta(atom, symbols, domains)
    lo, hi = _bounds(atom, domains)
    c = atom.comparator
    if atom.modulus is not None:
        m, r = atom.modulus, atom.value.value
        if not 0 <= r < m:
            if c is Comparator.EQ:
                raise PartitionError(f"{_txt(atom)}: remainder outside [0, {m})")
            anything = max(lo or Decimal(0), Decimal(0)) + m
            return Partition(atom, "modulo", (Number(anything),), (), ())
        clo, _ = _companion_bounds(companions, d)
        start = max((x for x in (clo, lo) if x is not None), default=Decimal(0))
        q = _ceil_to(start, m, r)
        if q <= 0:
            # a zero amount is degenerate; use the first positive multiple
            q = _ceil_to(Decimal(0) + d, m, r)
        if c is Comparator.EQ:
            valid, invalid, boundary = [q, q + m], [q + d], [q]
        else:
            valid, invalid, boundary = [q + d, q - d], [q], [q + d]
    else:
        v = atom.value.value
        table = {
            Comparator.GE: ([v + d, v], [v - d], [v]),
            Comparator.GT: ([v + d], [v], [v + d]),
            Comparator.LE: ([v - d, v], [v + d], [v]),
            Comparator.LT: ([v - d], [v], [v - d]),
            Comparator.EQ: ([v], [v - d, v + d], [v]),
            Comparator.NEQ: ([v + d, v - d], [v], [v - d, v + d]),
        }
        if c not in table:
            raise PartitionError(f"{_txt(atom)}: comparator not applicable to numbers")
        valid, invalid, boundary = table[c]
    valid = [x for x in valid if _in_bounds(x, lo, hi)]
    invalid = [x for x in invalid if _in_bounds(x, lo, hi)]
    boundary = [x for x in boundary if _in_bounds(x, lo, hi)]
    if not valid:
        raise PartitionError(f"{_txt(atom)} is unsatisfiable within [{lo}, {hi}]")
    num = lambda xs: tuple(Number(x) for x in dict.fromkeys(xs))
    return Partition(atom, value_kind(atom), num(valid), num(invalid), num(boundary))


def _time(atom: AtomicClause, domains: Domains) -> Partition:
    step = domains.time_step
    day = range(0, 86400)
    v = atom.value
    if isinstance(v, TimeRangeSet):
        valid, boundary, invalid = [], [], []
        for rg in v.ranges:
            s, e = rg.start.seconds, rg.end.seconds
            mid = (s + e) // 2
            valid += [mid, s, e]
            boundary += [s, e]
            invalid += [s - step, e + step]
        invalid = [x for x in invalid if x in day and not any(Time.from_seconds(x) in r for r in v.ranges)]
    else:
        t, c = v.seconds, atom.comparator
        table = {
            Comparator.GE: ([t + step, t], [t - step], [t]),
            Comparator.GT: ([t + step], [t], [t + step]),
            Comparator.LE: ([t - step, t], [t + step], [t]),
            Comparator.LT: ([t - step], [t], [t - step]),
            Comparator.EQ: ([t], [t - step, t + step], [t]),
            Comparator.NEQ: ([t + step, t - step], [t], [t - step, t + step]),
        }
        valid, invalid, boundary = table[c]
        valid = [x for x in valid if x in day]
        invalid = [x for x in invalid if x in day]
        boundary = [x for x in boundary if x in day]
    if not valid:
        raise PartitionError(f"{_txt(atom)} is unsatisfiable within one day")
    tm = lambda xs: tuple(Time.from_seconds(x) for x in dict.fromkeys(xs))
    return Partition(atom, "time", tm(valid), tm(invalid), tm(boundary))


def enum_domain(key: str, symbols, domains: Domains, observed: Mapping[str, Sequence[str]] | None) -> tuple[str, ...]:
    declared = domains.lookup(domains.enums, key)
    if declared:
        return tuple(declared)
    if symbols is not None:
        values = symbols.values_of(key)
        if values:
            return tuple(values)
    if observed:
        return tuple(observed.get(base_key(key), ()))
    return ()


def _enum(atom: AtomicClause, symbols, domains: Domains, observed) -> Partition:
    c, v = atom.comparator, atom.value
    dom = enum_domain(atom.key, symbols, domains, observed)
    if isinstance(v, StringList):
        members = list(v.items)
    elif isinstance(v, String):
        members = [v.text]
    else:
        raise PartitionError(f"{_txt(atom)}: unsupported value")
    others = [x for x in dom if x not in members] or [SENTINEL_PREFIX + members[0]]
    if c in (Comparator.EQ, Comparator.IN):
        valid, invalid = members, others
    elif c is Comparator.NEQ:
        valid, invalid = others, members
    else:
        raise PartitionError(f"{_txt(atom)}: ordering comparator on a non-numeric value is unsatisfiable")
    s = lambda xs: tuple(String(x) for x in dict.fromkeys(xs))
    return Partition(atom, "enum", s(valid), s(invalid), ())


def _boolean(atom: AtomicClause) -> Partition:
    b = atom.value.value
    if atom.comparator is Comparator.EQ:
        return Partition(atom, "boolean", (Boolean(b),), (Boolean(not b),))
    if atom.comparator is Comparator.NEQ:
        return Partition(atom, "boolean", (Boolean(not b),), (Boolean(b),))
    raise PartitionError(f"{_txt(atom)}: ordering comparator on a boolean is unsatisfiable")


def _txt(atom) -> str:
    return render_expr(atom)


def partition_atom(
    atom: Literal,
    symbols=None,
    domains: Domains | None = None,
    companions: Sequence[Literal] = (),
    observed: Mapping[str, Sequence[str]] | None = None,
) -> Partition:
    """Valid, invalid and boundary representatives of one literal.

    *companions* are the other literals on the same key; modulo clauses use
    their bounds to pick the nearest qualifying multiples.  A negated literal
    swaps the valid and invalid classes of its clause.
    """
    domains = domains or Domains()
    if isinstance(atom, Not):
        inner = partition_atom(atom.child, symbols, domains, companions, observed)
        if not inner.invalid_reps:
            raise PartitionError(f"{_txt(atom)} is unsatisfiable")
        return Partition(atom, inner.kind, inner.invalid_reps, inner.valid_reps, ())
    kind = value_kind(atom)
    if kind in ("numeric-interval", "modulo"):
        return _numeric(atom, symbols, domains, companions)
    if kind == "time":
        return _time(atom, domains)
    if kind == "boolean":
        return _boolean(atom)
    return _enum(atom, symbols, domains, observed)
