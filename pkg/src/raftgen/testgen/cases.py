"""Concrete test cases for one rule by partitioning and boundary analysis.

Conditions are first pushed into negation normal form and expanded into
conjunctive variants.  Each variant's literals are grouped into value
slots: every equality on a string key gets its own slot (``Action``,
``Action2``, ...), while all numeric or time literals on one key share a
slot and are solved together.  Cases are checked against the whole
condition with the module's own satisfaction test before they are kept.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping, Sequence

from ..trl import (
    And,
    AtomicClause,
    Boolean,
    Comparator,
    Expr,
    Not,
    Number,
    Rule,
    String,
    StringList,
    Time,
    TimeRangeSet,
    atoms,
    base_key,
    render_expr,
)
from .partition import (
    Domains,
    Literal,
    Partition,
    SENTINEL_PREFIX,
    PartitionError,
    literal_atom,
    numeric_delta,
    partition_atom,
    value_kind,
)

POLARITIES = ("positive", "boundary", "negative")
RESULT_KEYS = ("Result", "ResultStatus")


@dataclass(frozen=True)
class Strategy:
    """``negatives``: ``one-factor`` (default), ``exhaustive`` (every invalid
    representative) or ``pairwise`` (adds two-literal mutations)."""

    negatives: str = "one-factor"
    boundaries: bool = True
    max_variants: int = 64

    def __post_init__(self):
        if self.negatives not in ("one-factor", "exhaustive", "pairwise"):
            raise ValueError(f"unknown negative strategy {self.negatives!r}")


@dataclass(frozen=True)
class TestCase:
    id: int
    assignments: tuple[tuple[str, object], ...]
    expected: tuple[tuple[str, object], ...]
    polarity: str
    rule_id: int
    mutated: tuple[Literal, ...] = ()
    variant: tuple[Literal, ...] = field(default=(), compare=False)
    scenario_id: int | None = None

    __test__ = False

    def __post_init__(self):
        if self.polarity not in POLARITIES:
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if not self.expected:
            raise ValueError("a test case needs an expected result")

    @property
    def inputs(self) -> dict:
        return dict(self.assignments)

    @property
    def signature(self) -> tuple:
        return (self.assignments, self.expected)


class GenerationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# normal forms

_FLIP = {
    Comparator.EQ: Comparator.NEQ,
    Comparator.NEQ: Comparator.EQ,
    Comparator.GE: Comparator.LT,
    Comparator.LT: Comparator.GE,
    Comparator.GT: Comparator.LE,
    Comparator.LE: Comparator.GT,
}


def negate_literal(lit: Literal) -> Literal:
    if isinstance(lit, Not):
        return lit.child
    if lit.comparator is Comparator.IN:
        return Not(lit)
    return AtomicClause(lit.key, _FLIP[lit.comparator], lit.value, lit.modulus)


def to_dnf(expr: Expr, max_variants: int = 64) -> list[tuple[Literal, ...]]:
    """Conjunctive variants of *expr* (negations pushed onto the clauses)."""

    def go(e: Expr, neg: bool) -> list[tuple[Literal, ...]]:
        if isinstance(e, AtomicClause):
            return [(negate_literal(e) if neg else e,)]
        if isinstance(e, Not):
            return go(e.child, not neg)
        conj = isinstance(e, And) != neg
        parts = [go(c, neg) for c in e.children]
        if conj:
            out = []
            for combo in itertools.product(*parts):
                out.append(tuple(lit for branch in combo for lit in branch))
                if len(out) > max_variants:
                    raise GenerationError(f"condition expands into more than {max_variants} variants")
            return out
        out = [branch for p in parts for branch in p]
        if len(out) > max_variants:
            raise GenerationError(f"condition expands into more than {max_variants} variants")
        return out

    variants = []
    for v in go(expr, False):
        v = tuple(dict.fromkeys(v))
        if v not in variants:
            variants.append(v)
    return variants


# ---------------------------------------------------------------------------
# satisfaction test used to validate generated cases


def _num(v) -> Decimal | None:
    if isinstance(v, Number):
        return v.value
    if isinstance(v, String):
        try:
            return Decimal(v.text)
        except ArithmeticError:
            return None
    return None


def _cmp(a, b, c: Comparator) -> bool:
    return {
        Comparator.EQ: a == b,
        Comparator.NEQ: a != b,
        Comparator.GT: a > b,
        Comparator.GE: a >= b,
        Comparator.LT: a < b,
        Comparator.LE: a <= b,
    }[c]


def _one(atom: AtomicClause, v) -> bool:
    target, c = atom.value, atom.comparator
    if atom.modulus is not None:
        x = _num(v)
        if x is None:
            return False
        rem = x % atom.modulus
        if rem < 0:
            rem += atom.modulus
        return _cmp(rem, target.value, c)
    if isinstance(target, TimeRangeSet):
        return isinstance(v, Time) and v in target
    if isinstance(target, StringList):
        return isinstance(v, String) and v.text in target.items
    if isinstance(target, Number):
        x = _num(v)
        return x is not None and _cmp(x, target.value, c)
    if isinstance(target, Time):
        return isinstance(v, Time) and _cmp(v, target, c)
    if isinstance(target, Boolean):
        return isinstance(v, Boolean) and c in (Comparator.EQ, Comparator.NEQ) and _cmp(v.value, target.value, c)
    if c not in (Comparator.EQ, Comparator.NEQ):
        return False
    text = v.text if isinstance(v, String) else None
    if text is None:
        return c is Comparator.NEQ
    return _cmp(text, target.text, c)


def holds(lit: Literal, assignment: Mapping[str, object]) -> bool:
    """Literal truth; ``!=`` covers every value of the key group, others any one."""
    if isinstance(lit, Not):
        return not holds(lit.child, assignment)
    group = base_key(lit.key)
    values = [v for k, v in assignment.items() if base_key(k) == group]
    if not values:
        return False
    if lit.comparator is Comparator.NEQ:
        return all(_one(lit, v) for v in values)
    return any(_one(lit, v) for v in values)


def condition_holds(expr: Expr, assignment: Mapping[str, object]) -> bool:
    if isinstance(expr, AtomicClause):
        return holds(expr, assignment)
    if isinstance(expr, Not):
        return not condition_holds(expr.child, assignment)
    if isinstance(expr, And):
        return all(condition_holds(c, assignment) for c in expr.children)
    return any(condition_holds(c, assignment) for c in expr.children)


# ---------------------------------------------------------------------------
# slots


@dataclass
class _Slot:
    name: str
    literals: list  # literals whose truth this slot decides
    joint: bool  # numeric/time slot solved over all its literals
    value: object = None


def _is_universal(lit: Literal) -> bool:
    return isinstance(lit, Not) or lit.comparator is Comparator.NEQ


class _Names:
    def __init__(self):
        self.used: set[str] = set()

    def take(self, preferred: str) -> str:
        if preferred not in self.used:
            self.used.add(preferred)
            return preferred
        base = base_key(preferred)
        for i in itertools.count(1):
            name = base if i == 1 else f"{base}{i}"
            if name not in self.used:
                self.used.add(name)
                return name
        raise AssertionError


class _Planner:
    def __init__(self, rule: Rule, variant, symbols, domains, observed):
        self.rule = rule
        self.variant = variant
        self.symbols = symbols
        self.domains = domains
        self.observed = observed
        self.parts: dict[Literal, Partition] = {}
        self.slots: list[_Slot] = []
        self.universal: dict[str, list[Literal]] = {}
        names = _Names()
        joint_groups: dict[str, list[Literal]] = {}
        discrete: list[Literal] = []
        for lit in variant:
            atom = literal_atom(lit)
            if value_kind(atom) in ("numeric-interval", "modulo", "time"):
                joint_groups.setdefault(atom.key, []).append(lit)
            else:
                discrete.append(lit)
        for key, lits in joint_groups.items():
            for lit in lits:
                self.parts[lit] = partition_atom(lit, symbols, domains, [x for x in lits if x is not lit], observed)
            self.slots.append(_Slot(names.take(key), lits, True))
        for lit in discrete:
            self.parts[lit] = partition_atom(lit, symbols, domains, (), observed)
            if _is_universal(lit):
                self.universal.setdefault(base_key(literal_atom(lit).key), []).append(lit)
            else:
                self.slots.append(_Slot(names.take(literal_atom(lit).key), [lit], False))
        for group, lits in self.universal.items():
            if not any(not s.joint and base_key(s.name) == group for s in self.slots):
                self.slots.append(_Slot(names.take(literal_atom(lits[0]).key), list(lits), False))
        self.names = names

    def _group_universal(self, slot: _Slot) -> list[Literal]:
        return self.universal.get(base_key(slot.name), []) if not slot.joint else []

    def _fits(self, slot: _Slot, value, lits) -> bool:
        probe = {slot.name: value}
        return all(holds(l, probe) for l in lits)

    def _candidates(self, slot: _Slot, which: str) -> list:
        pool = []
        for lit in slot.literals:
            p = self.parts[lit]
            pool.extend(getattr(p, which))
        return list(dict.fromkeys(pool))

    def solve_positive(self) -> dict[str, object]:
        assignment = {}
        for slot in self.slots:
            lits = slot.literals + self._group_universal(slot)
            pool = self._candidates(slot, "valid_reps") + self._joint_extras(slot)
            value = next((v for v in pool if self._fits(slot, v, lits)), None)
            if value is None:
                raise GenerationError(f"no value satisfies {' and '.join(render_expr(l) for l in lits)}")
            slot.value = value
            assignment[slot.name] = value
        return assignment

    def _joint_extras(self, slot: _Slot) -> list:
        """Extra candidates for joint numeric slots: nearby multiples and steps."""
        if not slot.joint:
            return []
        nums = []
        for lit in slot.literals:
            atom = literal_atom(lit)
            if isinstance(atom.value, Number):
                nums.append(atom)
        if not nums:
            return []
        delta = min(numeric_delta(a, self.symbols, self.domains) for a in nums)
        moduli = [a.modulus for a in nums if a.modulus is not None] or [delta]
        seeds = []
        for lit in slot.literals:
            p = self.parts[lit]
            seeds += [v.value for v in (*p.valid_reps, *p.invalid_reps, *p.boundary_reps) if isinstance(v, Number)]
        out = []
        for s in dict.fromkeys(seeds):
            for m in moduli:
                base = (s / m).to_integral_value(rounding="ROUND_FLOOR") * m
                for k in range(-2, 3):
                    out.append(base + k * m)
            out += [s - delta, s + delta]
        lo = Decimal(0) if self.domains.nonnegative else None
        return [Number(x) for x in dict.fromkeys(out) if lo is None or x >= lo]

    def boundary_values(self, slot: _Slot) -> list:
        if not slot.joint:
            return []
        lits = slot.literals
        out = []
        for lit in lits:
            for b in self.parts[lit].boundary_reps:
                if b != slot.value and self._fits(slot, b, lits) and b not in out:
                    out.append(b)
                    break
        return out

    def invalid_values(self, slot: _Slot, lit: Literal) -> list:
        """Values for *slot* that falsify *lit* while keeping its other literals."""
        others = [l for l in slot.literals + self._group_universal(slot) if l is not lit]
        pool = list(self.parts[lit].invalid_reps)
        if slot.joint:
            extras = self._joint_extras(slot)
            target = pool[0].value if pool and isinstance(pool[0], Number) else None
            if target is not None:
                extras.sort(key=lambda v: (abs(v.value - target), v.value))
            pool += extras
        probe_ok = []
        for v in dict.fromkeys(pool):
            probe = {slot.name: v}
            if not holds(lit, probe) and all(holds(o, probe) for o in others):
                probe_ok.append(v)
        return probe_ok


def _expected(rule: Rule) -> tuple[tuple[str, object], ...]:
    out = []
    for a in atoms(rule.outcome):
        if a.comparator is Comparator.EQ and a.modulus is None:
            out.append((a.key, a.value))
    return tuple(out)


def negate_outcome(expected: Iterable[tuple[str, object]] | Mapping, failure: str = "Failure") -> tuple[tuple[str, object], ...]:
    """Expected result of a case whose condition does not hold.

    ``Result = Success`` and ``Result = Failure`` swap; any other result
    value becomes *failure*; clauses on other keys are dropped.
    """
    items = list(expected.items()) if isinstance(expected, Mapping) else list(expected)
    result = next((v for k, v in items if base_key(k) == "Result"), None)
    if result is None:
        return (("Result", String(failure)),)
    text = result.text if isinstance(result, String) else str(result)
    flipped = {"success": "Failure", "failure": "Success"}.get(text.lower(), failure)
    return (("Result", String(flipped)),)


def _fillers(rule: Rule, variant, planner: _Planner, assignment: dict) -> None:
    """Give keys used only by other variants a value that falsifies their clauses."""
    present = {base_key(k) for k in assignment}
    for atom in atoms(rule.condition):
        group = base_key(atom.key)
        if group in present:
            continue
        present.add(group)
        lits = [a for a in atoms(rule.condition) if base_key(a.key) == group]
        pool = []
        for a in lits:
            try:
                p = partition_atom(a, planner.symbols, planner.domains, [x for x in lits if x is not a], planner.observed)
            except PartitionError:
                continue
            pool += [*p.invalid_reps, *p.valid_reps]
        name = planner.names.take(atom.key)
        choice = next((v for v in pool if not any(holds(a, {name: v}) for a in lits)), pool[0] if pool else String("NONE"))
        assignment[name] = choice


def generate_cases(
    rule: Rule,
    symbols=None,
    domains: Domains | None = None,
    strategy: Strategy | None = None,
    observed: Mapping[str, Sequence[str]] | None = None,
) -> list[TestCase]:
    """Positive, boundary and negative cases for *rule*.

    Raises :class:`GenerationError` (or :class:`PartitionError`) when no
    conjunctive variant of the condition can be satisfied.
    """
    domains = domains or Domains()
    strategy = strategy or Strategy()
    expected = _expected(rule)
    if not expected:
        raise GenerationError(f"rule {rule.id} has no equality outcome to expect")
    negated = negate_outcome(expected, domains.failure_value)
    cases: list[TestCase] = []
    seen: set = set()
    errors = []

    order = {}
    for a in atoms(rule.condition):
        order.setdefault(base_key(a.key), len(order))

    def rank(name: str):
        suffix = name[len(base_key(name)):]
        return (order.get(base_key(name), len(order)), int(suffix or 1), name)

    def emit(assign: dict, exp, polarity, mutated=(), variant=()):
        item = tuple(sorted(assign.items(), key=lambda kv: rank(kv[0])))
        key = (item, exp)
        if key in seen:
            return
        seen.add(key)
        cases.append(TestCase(len(cases) + 1, item, exp, polarity, rule.id, tuple(mutated), tuple(variant)))

    for variant in to_dnf(rule.condition, strategy.max_variants):
        try:
            planner = _Planner(rule, variant, symbols, domains, observed)
            base = planner.solve_positive()
        except (PartitionError, GenerationError) as exc:
            errors.append(str(exc))
            continue
        _fillers(rule, variant, planner, base)
        if not condition_holds(rule.condition, base):
            errors.append(f"variant {' and '.join(render_expr(l) for l in variant)} not satisfied by its solution")
            continue
        emit(base, expected, "positive", variant=variant)

        if strategy.boundaries:
            for slot in planner.slots:
                for b in planner.boundary_values(slot):
                    trial = {**base, slot.name: b}
                    if condition_holds(rule.condition, trial):
                        emit(trial, expected, "boundary", variant=variant)

        single: list[tuple[Literal, dict]] = []
        for lit in variant:
            options = _negative_options(planner, lit, base)
            good = [t for t in options if not condition_holds(rule.condition, t)]
            if strategy.negatives == "exhaustive":
                chosen = good
            else:
                chosen = good[:1]
            for t in chosen:
                emit(t, negated, "negative", (lit,), variant)
            if good:
                single.append((lit, good[0]))
        if strategy.negatives == "pairwise":
            for (la, ta), (lb, tb) in itertools.combinations(single, 2):
                merged = {**base}
                merged.update({k: v for k, v in ta.items() if base.get(k) != v or k not in base})
                merged.update({k: v for k, v in tb.items() if base.get(k) != v or k not in base})
                if not holds(la, merged) and not holds(lb, merged) and all(
                    holds(l, merged) for l in variant if l is not la and l is not lb
                ) and not condition_holds(rule.condition, merged):
                    emit(merged, negated, "negative", (la, lb), variant)

    if not cases:
        raise GenerationError(f"rule {rule.id}: " + "; ".join(errors or ["no satisfiable variant"]))
    return cases


def _negative_options(planner: _Planner, lit: Literal, base: dict) -> list[dict]:
    """Assignments where *lit* fails and every other literal of the variant holds."""
    others = [l for l in planner.variant if l is not lit]
    out = []
    owner = next((s for s in planner.slots if any(l is lit for l in s.literals)), None)
    if owner is not None and (owner.joint or not _is_universal(lit)):
        group = base_key(owner.name)
        taken = {v for k, v in base.items() if k != owner.name and base_key(k) == group}
        # values already held by a sibling slot make a confusing negative; try them last
        pool = sorted(planner.invalid_values(owner, lit), key=lambda v: v in taken)
        atom = literal_atom(lit)
        if pool and all(v in taken for v in pool) and not owner.joint and isinstance(atom.value, String):
            pool.insert(0, String(SENTINEL_PREFIX + atom.value.text))
        for v in pool:
            trial = {**base, owner.name: v}
            if not holds(lit, trial) and all(holds(o, trial) for o in others):
                out.append(trial)
        return out
    # universal literal (!= or not-in): one extra or owned slot takes a forbidden value
    group = base_key(literal_atom(lit).key)
    own = next((s for s in planner.slots if not s.joint and base_key(s.name) == group and s.literals and all(_is_universal(l) for l in s.literals)), None)
    name = own.name if own is not None else None
    if name is None:
        names = _Names()
        names.used = set(base)
        name = names.take(literal_atom(lit).key)
    for v in planner.parts[lit].invalid_reps:
        trial = {**base, name: v}
        if not holds(lit, trial) and all(holds(o, trial) for o in others):
            out.append(trial)
    return out
