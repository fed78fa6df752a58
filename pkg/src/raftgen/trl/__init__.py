"""The testable requirement language: IF-THEN rules over KEY-OP-VALUE clauses."""

from .classify import Category, classify_key, key_categories
from .evaluate import satisfies
from .lexer import tokenize
from .model import (
    And,
    AtomicClause,
    Boolean,
    Comparator,
    Expr,
    Not,
    Number,
    Or,
    ParseDiagnostic,
    Rule,
    RuleSet,
    String,
    StringList,
    Time,
    TimeRange,
    TimeRangeSet,
    Value,
    atoms,
    base_key,
)
from .parser import parse_rules
from .printer import (
    canonical_rule,
    canonicalize,
    render_atom,
    render_expr,
    render_rule,
    render_rules,
    render_value,
    value_text,
)

__all__ = [
    "And",
    "AtomicClause",
    "Boolean",
    "Category",
    "Comparator",
    "Expr",
    "Not",
    "Number",
    "Or",
    "ParseDiagnostic",
    "Rule",
    "RuleSet",
    "String",
    "StringList",
    "Time",
    "TimeRange",
    "TimeRangeSet",
    "Value",
    "atoms",
    "base_key",
    "canonical_rule",
    "canonicalize",
    "classify_key",
    "key_categories",
    "parse_rules",
    "render_atom",
    "render_expr",
    "render_rule",
    "render_rules",
    "render_value",
    "satisfies",
    "tokenize",
    "value_text",
]
