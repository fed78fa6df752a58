"""Symbol libraries, requirement representations and their aggregation.

The grammar skeleton is fixed; a domain contributes only the key vocabulary
of each middle-layer category, its semantic types and optional enumerated
value domains.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..trl.model import Comparator, base_key
from .metamodel import MIDDLE, normalize_name

log = logging.getLogger(__name__)

LOGICAL = ("and", "or", "not")
COMPARATORS = tuple(c.value for c in Comparator)
# widening order for conflicting declarations; the later entry wins
# narrowest to widest; a string can hold any of the others
TYPE_ORDER = ("boolean", "number", "time", "enum", "string")

_NUMERIC_WORDS = {
    "quantity", "price", "amount", "balance", "volume", "count", "number",
    "rate", "ratio", "size", "fee", "value", "speed", "voltage", "frequency",
    "power", "current", "percentage", "limit",
}
_CATEGORY_ALIASES = {
    "precondition": "Precondition",
    "preconditions": "Precondition",
    "condition": "Precondition",
    "conditions": "Precondition",
    "operation": "Operation",
    "operations": "Operation",
    "action": "Operation",
    "actions": "Operation",
    "expectedresult": "ExpectedResult",
    "expectedresults": "ExpectedResult",
    "expectedoutcome": "ExpectedResult",
    "result": "ExpectedResult",
    "results": "ExpectedResult",
    "outcome": "ExpectedResult",
}
_BNF_ELEMENT = {
    "PreconditionElement": "Precondition",
    "OperationElement": "Operation",
    "ResultElement": "ExpectedResult",
}


class RepresentationError(ValueError):
    pass


def infer_type(key: str) -> str:
    words = normalize_name(base_key(key))
    return "number" if any(w in _NUMERIC_WORDS for w in words) else "string"


@dataclass(frozen=True)
class SymbolLibrary:
    """Domain vocabulary: keys per middle-layer category plus their types.

    ``types`` maps every key to one of :data:`TYPE_ORDER`; keys without a
    declaration get ``enum`` when they have a value domain, otherwise a
    name-based guess.  Keys listed under several categories must appear in
    ``shared``.
    """

    domain: Mapping[str, tuple[str, ...]]
    types: Mapping[str, str] = field(default_factory=dict)
    value_domains: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    actionlike: frozenset[str] = frozenset()
    shared: frozenset[str] = frozenset()

    logical = LOGICAL
    comparators = COMPARATORS

    def __post_init__(self):
        domain = {cat: tuple(dict.fromkeys(self.domain.get(cat, ()))) for cat in MIDDLE}
        extra = set(self.domain) - set(MIDDLE)
        if extra:
            raise RepresentationError(f"unknown symbol categories {sorted(extra)}")
        counts: dict[str, int] = {}
        for keys in domain.values():
            for k in keys:
                counts[k] = counts.get(k, 0) + 1
        undeclared = sorted(k for k, n in counts.items() if n > 1 and k not in self.shared)
        if undeclared:
            raise RepresentationError(f"keys in several categories must be declared shared: {undeclared}")
        value_domains = {k: tuple(v) for k, v in self.value_domains.items()}
        types = {}
        for k in counts:
            t = self.types.get(k) or ("enum" if k in value_domains else infer_type(k))
            if t not in TYPE_ORDER:
                raise RepresentationError(f"unknown semantic type {t!r} for {k}")
            types[k] = t
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "value_domains", value_domains)
        object.__setattr__(self, "actionlike", frozenset(self.actionlike))
        object.__setattr__(self, "shared", frozenset(self.shared))

    def all_keys(self) -> list[str]:
        return list(dict.fromkeys(k for cat in MIDDLE for k in self.domain[cat]))

    def type_of(self, key: str) -> str | None:
        return self.types.get(key) or self.types.get(base_key(key))

    def values_of(self, key: str) -> tuple[str, ...]:
        return self.value_domains.get(key) or self.value_domains.get(base_key(key)) or ()

    def render(self) -> str:
        """Human-readable listing used inside prompts."""
        lines = [
            "* Logical Symbols: " + ", ".join(self.logical),
            "* Comparison Symbols: " + ", ".join(self.comparators),
            "* Domain Symbols",
        ]
        for cat in MIDDLE:
            lines.append(f"  * {cat}: " + ", ".join(self.domain[cat]))
        typed = [f"{k} ({self.types[k]})" for k in self.all_keys()]
        lines.append("* Key Types: " + ", ".join(typed))
        for k, vals in self.value_domains.items():
            lines.append(f"  * {k} values: " + ", ".join(vals))
        return "\n".join(lines)


SKELETON = """\
Rule ::= "IF" <Precondition> "AND" <Operation> "THEN" <ExpectedOutcome>

Precondition ::= <AtomicPrecondition> | <CompoundPrecondition>
AtomicPrecondition ::= <PreconditionElement> <Comparator> <Value>
                     | <PreconditionElement> "%" <NumberLiteral> <Comparator> <NumberLiteral>
CompoundPrecondition ::= "(" <Precondition> ")"
                    | <Precondition> "AND" <Precondition>
                    | <Precondition> "OR" <Precondition>
                    | "NOT" <Precondition>

Operation ::= <AtomicOperation> | <CompoundOperation>
AtomicOperation ::= <OperationElement> <Comparator> <Value>
                  | <OperationElement> "%" <NumberLiteral> <Comparator> <NumberLiteral>
CompoundOperation ::= "(" <Operation> ")"
                 | <Operation> "AND" <Operation>
                 | <Operation> "OR" <Operation>
                 | "NOT" <Operation>

ExpectedOutcome ::= <AtomicOutcome> | <CompoundOutcome>
AtomicOutcome ::= <ResultElement> <Comparator> <Value>
CompoundOutcome ::= "(" <ExpectedOutcome> ")"
                  | <ExpectedOutcome> "AND" <ExpectedOutcome>

PreconditionElement ::= {Precondition}
OperationElement ::= {Operation}
ResultElement ::= {ExpectedResult}

Comparator ::= "=" | "!=" | ">" | "<" | ">=" | "<=" | "in"

Value ::= <StringLiteral> | <NumberLiteral> | <BooleanLiteral> | <TimeLiteral> | <TimeRangeSet>
StringLiteral ::= "\\"" [^"]* "\\"" | [A-Za-z_][A-Za-z0-9_]*
NumberLiteral ::= [0-9]+ ("." [0-9]+)?
BooleanLiteral ::= "true" | "false"
TimeLiteral ::= [0-9]{2} ":" [0-9]{2} (":" [0-9]{2})?
TimeRange ::= <TimeLiteral> "-" <TimeLiteral>
TimeRangeSet ::= "[" <TimeRange> ("," <TimeRange>)* "]" | "[" <StringLiteral> ("," <StringLiteral>)* "]"
"""


def render_syntax(symbols: SymbolLibrary) -> str:
    """The fixed grammar skeleton with the library's keys substituted."""
    alts = {
        cat: " | ".join(f'"{k}"' for k in symbols.domain[cat]) or '""' for cat in MIDDLE
    }
    return (
        SKELETON.replace("{Precondition}", alts["Precondition"])
        .replace("{Operation}", alts["Operation"])
        .replace("{ExpectedResult}", alts["ExpectedResult"])
    )


@dataclass(frozen=True)
class Representation:
    symbols: SymbolLibrary
    syntax_text: str = ""
    provenance: str = ""

    def __post_init__(self):
        if not self.syntax_text:
            object.__setattr__(self, "syntax_text", render_syntax(self.symbols))


def _key_list(text: str) -> list[str]:
    return [k for k in re.findall(r"[A-Za-z_]\w*", text)]


def parse_representation_text(text: str, provenance: str = "") -> Representation:
    """Extract the domain symbols (and BNF, when present) from free text.

    Understands bullet lines such as ``* Precondition: Actor, Time`` and BNF
    productions ``PreconditionElement ::= "Actor" | "Time"``; the two sources
    are merged per category.
    """
    domain: dict[str, list[str]] = {cat: [] for cat in MIDDLE}
    found = False
    for m in re.finditer(r"^[ \t]*[*\-+][ \t]*([A-Za-z ]+?)[ \t]*:[ \t]*(.+)$", text, re.M):
        cat = _CATEGORY_ALIASES.get(m.group(1).replace(" ", "").lower())
        if cat:
            domain[cat].extend(_key_list(m.group(2)))
            found = True
    for name, cat in _BNF_ELEMENT.items():
        m = re.search(rf"^[ \t]*{name}[ \t]*::=((?:.|\n[ \t]*\|)*)", text, re.M)
        if m:
            domain[cat].extend(re.findall(r'"([^"]+)"', m.group(1)))
            found = True
    if not found:
        raise RepresentationError("no domain symbols found")
    counts: dict[str, int] = {}
    for cat in MIDDLE:
        domain[cat] = list(dict.fromkeys(domain[cat]))
        for k in domain[cat]:
            counts[k] = counts.get(k, 0) + 1
    shared = frozenset(k for k, n in counts.items() if n > 1)
    bnf = re.search(r"```\s*(?:bnf|BNF)?\s*\n(.*?)```", text, re.S)
    symbols = SymbolLibrary({c: tuple(v) for c, v in domain.items()}, shared=shared)
    syntax = bnf.group(1) if bnf and "::=" in bnf.group(1) else ""
    return Representation(symbols, syntax, provenance)


def aggregate_representations(reps: Sequence[Representation]) -> Representation:
    """Union of key vocabularies across representations.

    Keys are deduplicated per category by normalized name, keeping the first
    spelling seen.  Conflicting semantic types resolve to the widest in
    :data:`TYPE_ORDER`; value domains and action-like flags are unioned.
    """
    if not reps:
        raise ValueError("aggregate_representations needs at least one representation")
    if len(reps) == 1:
        return reps[0]
    spelling: dict[tuple[str, ...], str] = {}
    domain: dict[str, list[str]] = {cat: [] for cat in MIDDLE}
    types: dict[str, str] = {}
    values: dict[str, list[str]] = {}
    actionlike: set[str] = set()
    for rep in reps:
        sym = rep.symbols
        for cat in MIDDLE:
            for key in sym.domain[cat]:
                name = spelling.setdefault(normalize_name(key), key)
                if name not in domain[cat]:
                    domain[cat].append(name)
                t = sym.types[key]
                old = types.get(name)
                if old is not None and old != t:
                    t = max(old, t, key=TYPE_ORDER.index)
                    log.warning("type conflict for %s: %s vs %s, using %s", name, old, sym.types[key], t)
                types[name] = t
                if key in sym.value_domains:
                    bucket = values.setdefault(name, [])
                    bucket.extend(v for v in sym.value_domains[key] if v not in bucket)
                if key in sym.actionlike:
                    actionlike.add(name)
    counts: dict[str, int] = {}
    for cat in MIDDLE:
        for k in domain[cat]:
            counts[k] = counts.get(k, 0) + 1
    shared = {k for k, n in counts.items() if n > 1}
    symbols = SymbolLibrary(
        {c: tuple(v) for c, v in domain.items()},
        types,
        {k: tuple(v) for k, v in values.items()},
        frozenset(actionlike),
        frozenset(shared),
    )
    return Representation(symbols, render_syntax(symbols), "aggregated")

