"""Canonical text form and canonicalization of rules and expressions."""

from __future__ import annotations

import re
from decimal import Decimal

from .lexer import KEYWORDS
from .model import (
    And,
    AtomicClause,
    Boolean,
    Expr,
    Not,
    Number,
    Or,
    Rule,
    RuleSet,
    String,
    StringList,
    Time,
    TimeRangeSet,
    Value,
)

_BARE = re.compile(r"[^\W\d]\w*")


def render_number(d: Decimal) -> str:
    text = format(d.normalize(), "f")
    return "0" if text in ("-0", "0") else text


def _render_text(text: str) -> str:
    if _BARE.fullmatch(text) and text.lower() not in KEYWORDS:
        return text
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_value(value: Value) -> str:
    if isinstance(value, String):
        return _render_text(value.text)
    if isinstance(value, Number):
        return render_number(value.value)
    if isinstance(value, Boolean):
        return "true" if value.value else "false"
    if isinstance(value, Time):
        return str(value)
    if isinstance(value, TimeRangeSet):
        return "[" + ", ".join(str(r) for r in value.ranges) + "]"
    if isinstance(value, StringList):
        return "[" + ", ".join(_render_text(s) for s in value.items) + "]"
    raise TypeError(f"not a rule value: {value!r}")


def value_text(value: Value) -> str:
    """Plain text of a value, unquoted; what vagueness checks look at."""
    if isinstance(value, String):
        return value.text
    return render_value(value)


def render_atom(atom: AtomicClause) -> str:
    key = atom.key
    if atom.modulus is not None:
        key = f"{key} % {render_number(atom.modulus)}"
    return f"{key} {atom.comparator.symbol} {render_value(atom.value)}"


def render_expr(expr: Expr) -> str:
    if isinstance(expr, AtomicClause):
        return render_atom(expr)
    if isinstance(expr, Not):
        inner = render_expr(expr.child)
        if isinstance(expr.child, AtomicClause):
            return f"not {inner}"
        return f"not ({inner})"
    if isinstance(expr, And):
        # and binds tighter than or, so only or-children need parentheses
        return " and ".join(
            f"({render_expr(c)})" if isinstance(c, Or) else render_expr(c) for c in expr.children
        )
    return " or ".join(render_expr(c) for c in expr.children)


def render_rule(rule: Rule) -> str:
    return f"rule {rule.id}\nif {render_expr(rule.condition)}\nthen {render_expr(rule.outcome)}"


def render_rules(rules: RuleSet | list[Rule]) -> str:
    return "".join(render_rule(r) + "\n" for r in rules)


def canonicalize(expr: Expr) -> Expr:
    """Flatten nested same-operator nodes, drop duplicate operands, sort
    operands by rendered text and eliminate double negation.

    The result is idempotent: ``canonicalize(canonicalize(e)) == canonicalize(e)``.
    """
    if isinstance(expr, AtomicClause):
        return expr
    if isinstance(expr, Not):
        child = canonicalize(expr.child)
        if isinstance(child, Not):
            return child.child
        return Not(child)
    op = type(expr)
    flat: list[Expr] = []
    for child in expr.children:
        c = canonicalize(child)
        if isinstance(c, op):
            flat.extend(c.children)
        else:
            flat.append(c)
    unique = {render_expr(c): c for c in flat}
    ordered = tuple(unique[k] for k in sorted(unique))
    if len(ordered) == 1:
        return ordered[0]
    return op(ordered)


def canonical_rule(rule: Rule) -> Rule:
    return Rule(rule.id, canonicalize(rule.condition), canonicalize(rule.outcome), rule.source_span)
