"""Executable testability checks over parsed rules.

Each built-in constraint kind maps to a small hand-written predicate; the
OCL text carried by a :class:`~raftgen.knowledge.TestabilityConstraint`
is audit metadata only.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .knowledge.constraints import DEFAULT_IDS, ConstraintSet
from .knowledge.representation import SymbolLibrary
from .trl import (
    AtomicClause,
    Boolean,
    Category,
    Comparator,
    Number,
    Rule,
    RuleSet,
    String,
    StringList,
    Time,
    atoms,
    canonicalize,
    classify_key,
    key_categories,
    render_atom,
    render_expr,
    render_rule,
)

RESULT_KEYS = ("Result", "ResultStatus")
DISPOSITIONS = ("accepted", "refined", "excluded-for-review")


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    rule_id: int
    detail: str
    offending_atom: AtomicClause | None = None

    def to_dict(self) -> dict:
        d = {"constraint_id": self.constraint_id, "rule_id": self.rule_id, "detail": self.detail}
        if self.offending_atom is not None:
            d["offending_atom"] = render_atom(self.offending_atom)
        return d


@dataclass(frozen=True)
class Verdict:
    rule_id: int
    testable: bool
    violations: tuple[Violation, ...] = ()
    disposition: str = "accepted"
    replacement: Rule | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        if self.testable != (not self.violations):
            raise ValueError("a verdict is testable exactly when it has no violations")
        if self.disposition not in DISPOSITIONS:
            raise ValueError(f"unknown disposition {self.disposition!r}")
        if self.disposition == "refined" and self.replacement is None:
            raise ValueError("a refined verdict must record its replacement rule")

    @property
    def usable(self) -> bool:
        return self.disposition in ("accepted", "refined")

    def to_dict(self) -> dict:
        d = {
            "rule_id": self.rule_id,
            "testable": self.testable,
            "disposition": self.disposition,
            "violations": [v.to_dict() for v in self.violations],
        }
        if self.replacement is not None:
            d["replacement"] = render_rule(self.replacement)
        if self.notes:
            d["notes"] = list(self.notes)
        return d


# ---------------------------------------------------------------------------
# vagueness lexicon

_DEFAULT_PHRASES = (
    "core … session",
    "relevant",
    "appropriate",
    "reasonable",
    "timely",
    "promptly",
    "as soon as possible",
    "normal",
    "certain",
    "specific",
    "some",
    "various",
    "etc",
    "and so on",
    "if necessary",
    "as needed",
    "as required",
    "submission time",
)
_DEFAULT_REFERENCES = (
    "article",
    "previous",
    "aforementioned",
    "above",
    "preceding",
    "foregoing",
    "earlier",
    "chapter",
    "section",
    "clause",
    "paragraph",
)
_DEFAULT_INDETERMINATE = (
    "other",
    "others",
    "otherwise specified",
    "unless otherwise specified",
    "otherwise provided",
    "etc",
    "such as",
)


def _words(text: str) -> list[str]:
    """Lowercase words of free text or an UpperCamelCase identifier."""
    out = []
    for token in re.findall(r"[A-Za-z0-9]+", text):
        out.extend(_camel_words(token))
    return out


def _camel_words(token: str) -> list[str]:
    return [w.lower() for w in re.findall(r"[A-Z]+(?=[A-Z][a-z]|\d|\b)|[A-Z]?[a-z]+|[A-Z]+|\d+", token)] or [token.lower()]


def _phrase_pattern(phrase: str) -> re.Pattern:
    # "a … b" means word a followed later by word b
    parts = [p.split() for p in re.split(r"\s*(?:…|\.\.\.)\s*", phrase.lower().strip())]
    body = r"\b.*\b".join(r"\s+".join(map(re.escape, words)) for words in parts if words)
    return re.compile(rf"(?:^|\s){body}(?:\s|$)")


@dataclass(frozen=True)
class VaguenessLexicon:
    """Marker phrases that make a clause value non-concrete.

    Phrases are matched on whole words of the value, after splitting
    identifiers such as ``CoreBondTradingSession`` into words.  An ellipsis
    (``core … session``) allows any words in between.
    """

    phrases: frozenset[str] = frozenset(_DEFAULT_PHRASES)
    reference_markers: frozenset[str] = frozenset(_DEFAULT_REFERENCES)
    indeterminate_value_markers: frozenset[str] = frozenset(_DEFAULT_INDETERMINATE)

    def __post_init__(self):
        for name in ("phrases", "reference_markers", "indeterminate_value_markers"):
            object.__setattr__(self, name, frozenset(p.lower().strip() for p in getattr(self, name) if p.strip()))

    def extended(self, phrases=(), reference_markers=(), indeterminate_value_markers=()) -> VaguenessLexicon:
        return VaguenessLexicon(
            self.phrases | set(phrases),
            self.reference_markers | set(reference_markers),
            self.indeterminate_value_markers | set(indeterminate_value_markers),
        )

    def find(self, text: str) -> tuple[str, str] | None:
        """First ``(group, marker)`` found in *text*, or None."""
        joined = " ".join(_words(text))
        for group, markers in (
            ("reference", self.reference_markers),
            ("indeterminate", self.indeterminate_value_markers),
            ("vague", self.phrases),
        ):
            for marker in sorted(markers):
                if _phrase_pattern(marker).search(joined):
                    return group, marker
        return None


DEFAULT_LEXICON = VaguenessLexicon()

# verbs naming a mental state rather than an operation the system can perform
DEFAULT_NON_EXECUTABLE = frozenset({"consider", "understand", "know"})


# ---------------------------------------------------------------------------
# individual checks


def _outcome_category(atom: AtomicClause, symbols: SymbolLibrary) -> Category:
    cats = key_categories(atom.key, symbols)
    return Category.EXPECTED_RESULT if Category.EXPECTED_RESULT in cats else classify_key(atom.key, symbols)


def check_structural_completeness(
    rule: Rule, symbols: SymbolLibrary, constraint_id: str = DEFAULT_IDS["structural-completeness"]
) -> list[Violation]:
    """Condition needs a Precondition and an Operation clause, outcome a result clause."""
    in_condition = {classify_key(a.key, symbols) for a in atoms(rule.condition)}
    in_outcome = {_outcome_category(a, symbols) for a in atoms(rule.outcome)}
    out = []
    for cat, where, found in (
        (Category.PRECONDITION, "condition", in_condition),
        (Category.OPERATION, "condition", in_condition),
        (Category.EXPECTED_RESULT, "outcome", in_outcome),
    ):
        if cat not in found:
            out.append(Violation(constraint_id, rule.id, f"{where} has no {cat.value} clause"))
    return out


def _value_strings(value) -> list[str]:
    if isinstance(value, String):
        return [value.text]
    if isinstance(value, StringList):
        return list(value.items)
    return []


def check_determinism(
    rule: Rule,
    lexicon: VaguenessLexicon = DEFAULT_LEXICON,
    constraint_id: str = DEFAULT_IDS["determinism"],
) -> list[Violation]:
    out = []
    for atom in [*atoms(rule.condition), *atoms(rule.outcome)]:
        texts = _value_strings(atom.value)
        if any(not t.strip() for t in texts):
            out.append(Violation(constraint_id, rule.id, f"{atom.key} has an empty value", atom))
            continue
        for text in texts:
            hit = lexicon.find(text)
            if hit:
                group, marker = hit
                out.append(Violation(constraint_id, rule.id, f"{atom.key} = {text} is not concrete ({group} marker {marker!r})", atom))
                break
    return out


def check_action_executability(
    rule: Rule,
    symbols: SymbolLibrary,
    non_executable: Iterable[str] = DEFAULT_NON_EXECUTABLE,
    constraint_id: str = DEFAULT_IDS["action-executability"],
) -> list[Violation]:
    verbs = {v.lower() for v in non_executable}
    actions = [
        a for a in atoms(rule.condition) if a.base_key == "Action" or a.base_key in symbols.actionlike or a.key in symbols.actionlike
    ]
    if not actions:
        return [Violation(constraint_id, rule.id, "condition has no Action clause")]
    out = []
    for a in actions:
        for text in _value_strings(a.value):
            words = _camel_words(text) if text else []
            if words and words[0] in verbs:
                out.append(Violation(constraint_id, rule.id, f"{a.key} = {text} is not an executable operation", a))
    return out


def _concrete_literal(value) -> bool:
    if isinstance(value, String):
        return bool(value.text.strip())
    return isinstance(value, (Number, Boolean, Time))


def check_result_observability(
    rule: Rule, symbols: SymbolLibrary | None = None, constraint_id: str = DEFAULT_IDS["result-observability"]
) -> list[Violation]:
    for a in atoms(rule.outcome):
        if a.base_key in RESULT_KEYS and a.comparator is Comparator.EQ and a.modulus is None and _concrete_literal(a.value):
            return []
    return [Violation(constraint_id, rule.id, "outcome has no Result or ResultStatus clause with a concrete value")]


def _result_atoms(rule: Rule) -> dict[str, str]:
    return {a.key: render_atom(a) for a in atoms(rule.outcome) if a.base_key in RESULT_KEYS}


def conflict_pairs(rules: RuleSet | Sequence[Rule]) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Pairs with equal canonical conditions and conflicting results.

    Returns ``(conflicts, soft)``: *soft* pairs agree on their result clauses
    but differ in other outcome clauses.
    """
    buckets: dict[str, list[Rule]] = defaultdict(list)
    for r in rules:
        buckets[render_expr(canonicalize(r.condition))].append(r)
    conflicts, soft = [], []
    for group in buckets.values():
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                ra, rb = _result_atoms(a), _result_atoms(b)
                if any(ra.get(k) != rb.get(k) for k in set(ra) | set(rb)):
                    conflicts.append((a.id, b.id))
                elif render_expr(canonicalize(a.outcome)) != render_expr(canonicalize(b.outcome)):
                    soft.append((a.id, b.id))
    return conflicts, soft


def check_non_conflict(
    rules: RuleSet | Sequence[Rule], constraint_id: str = DEFAULT_IDS["non-conflict"]
) -> list[Violation]:
    conflicts, _ = conflict_pairs(rules)
    out = []
    for a, b in conflicts:
        out.append(Violation(constraint_id, a, f"same condition as rule {b} but a different expected result"))
        out.append(Violation(constraint_id, b, f"same condition as rule {a} but a different expected result"))
    return sorted(out, key=lambda v: (v.rule_id, v.detail))


# ---------------------------------------------------------------------------
# assessment

_PER_RULE: dict[str, Callable] = {
    "structural-completeness": lambda r, c, s, lex: check_structural_completeness(r, s, c.id),
    "determinism": lambda r, c, s, lex: check_determinism(r, lex, c.id),
    "action-executability": lambda r, c, s, lex: check_action_executability(
        r, s, c.params.get("non_executable", DEFAULT_NON_EXECUTABLE), c.id
    ),
    "result-observability": lambda r, c, s, lex: check_result_observability(r, s, c.id),
}


def purely_descriptive(violations: Iterable[Violation], constraints: ConstraintSet) -> bool:
    """Heuristic: no operation and no complete structure means prose, not a requirement."""
    ids = {v.constraint_id for v in violations}
    kinds = {c.kind for c in constraints if c.id in ids}
    return {"structural-completeness", "action-executability"} <= kinds


def assess(
    rules: RuleSet | Sequence[Rule],
    constraints: ConstraintSet,
    symbols: SymbolLibrary,
    lexicon: VaguenessLexicon = DEFAULT_LEXICON,
    workers: int = 1,
) -> list[Verdict]:
    """One verdict per rule, each enabled constraint evaluated independently."""
    rules = list(rules)
    for c in constraints:
        if c.kind not in _PER_RULE and c.kind not in ("non-conflict", "custom"):
            raise ValueError(f"unsupported constraint kind {c.kind!r} for {c.id}")
    per_rule = [c for c in constraints if c.kind in _PER_RULE]
    customs = tuple(f"custom constraint {c.id} recorded, not executed" for c in constraints if c.kind == "custom")

    def one(rule: Rule) -> list[Violation]:
        found: list[Violation] = []
        for c in per_rule:
            found.extend(_PER_RULE[c.kind](rule, c, symbols, lexicon))
        return found

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            local = list(pool.map(one, rules))
    else:
        local = [one(r) for r in rules]

    conflicts: dict[int, list[Violation]] = defaultdict(list)
    for c in constraints.by_kind("non-conflict"):
        for v in check_non_conflict(rules, c.id):
            conflicts[v.rule_id].append(v)

    verdicts = []
    for rule, found in zip(rules, local):
        found = found + conflicts.get(rule.id, [])
        notes = customs
        if found and purely_descriptive(found, constraints):
            notes = notes + ("purely descriptive: no operation and incomplete structure",)
        verdicts.append(
            Verdict(rule.id, not found, tuple(found), "accepted" if not found else "excluded-for-review", notes=notes)
        )
    return verdicts


def testable_fraction(verdicts: Sequence[Verdict]) -> float:
    return sum(v.testable for v in verdicts) / len(verdicts) if verdicts else 0.0


def verdicts_to_jsonl(verdicts: Iterable[Verdict]) -> str:
    return "".join(json.dumps(v.to_dict(), ensure_ascii=False) + "\n" for v in verdicts)


def verdicts_from_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def exclusion_report(verdicts: Sequence[Verdict], rules: RuleSet | None = None) -> str:
    """Plain-text report of excluded rules grouped by violated constraint."""
    groups: dict[str, list[tuple[Verdict, Violation]]] = defaultdict(list)
    excluded = [v for v in verdicts if v.disposition == "excluded-for-review"]
    for verdict in excluded:
        for viol in verdict.violations:
            groups[viol.constraint_id].append((verdict, viol))
    lines = [f"{len(excluded)} of {len(verdicts)} rules excluded for review", ""]
    for cid in sorted(groups):
        lines.append(f"== {cid} ({len({v.rule_id for v, _ in groups[cid]})} rules)")
        for verdict, viol in groups[cid]:
            lines.append(f"  rule {verdict.rule_id}: {viol.detail}")
            rule = rules.get(verdict.rule_id) if rules is not None else None
            if rule is not None:
                lines.append(f"    if {render_expr(rule.condition)} then {render_expr(rule.outcome)}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


__all__ = [
    "DEFAULT_LEXICON",
    "DEFAULT_NON_EXECUTABLE",
    "RESULT_KEYS",
    "VaguenessLexicon",
    "Verdict",
    "Violation",
    "assess",
    "check_action_executability",
    "check_determinism",
    "check_non_conflict",
    "check_result_observability",
    "check_structural_completeness",
    "conflict_pairs",
    "exclusion_report",
    "purely_descriptive",
    "testable_fraction",
    "verdicts_from_jsonl",
    "verdicts_to_jsonl",
]
