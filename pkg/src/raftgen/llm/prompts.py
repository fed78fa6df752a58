"""Prompt templates and knowledge injection.

Templates reference knowledge through named placeholders; only the names
in :data:`PLACEHOLDERS` are substituted, so literal braces (as in BNF
repetition counts) pass through untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Sequence

from ..knowledge.constraints import TestabilityConstraint
from ..knowledge.plantuml import to_plantuml

PLACEHOLDERS = ("meta_model", "symbols", "syntax", "constraints", "retrieved", "input_rule")
_SLOT = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")

FEEDBACK_HEADING = "### Grammar violations to fix"
REFORMAT_HEADING = "### Your previous answer could not be used"


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str

    @property
    def placeholders(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(_SLOT.findall(self.body)))


def _knowledge_part(knowledge: Any, name: str):
    if knowledge is None:
        return None
    if isinstance(knowledge, dict):
        return knowledge.get(name)
    return getattr(knowledge, name, None)


def render_constraint(c: TestabilityConstraint) -> str:
    head = f"{c.id} ({c.name})" if c.name and c.name != c.id else c.id
    return f"- {head}\n{c.ocl_text}".rstrip() if c.ocl_text else f"- {head}"


def render_retrieved(chunks: Sequence) -> str:
    if not chunks:
        return "(no reference material)"
    parts = []
    for ch in chunks:
        parts.append(f"[{ch.doc_id} @{ch.start}-{ch.end}]\n{ch.text.strip()}")
    return "\n\n".join(parts)


def build_prompt(
    template: PromptTemplate,
    knowledge: Any = None,
    retrieved: Sequence = (),
    input_text: str | None = None,
    constraint: TestabilityConstraint | None = None,
) -> str:
    """Fill *template* from the knowledge artifacts.

    *knowledge* is a :class:`~raftgen.knowledge.KnowledgePack` or a dict with
    any of ``metamodel``, ``representation`` and ``constraints``.  When
    *constraint* is given, ``{constraints}`` expands to that single
    constraint only.
    """
    rep = _knowledge_part(knowledge, "representation")
    meta = _knowledge_part(knowledge, "metamodel")
    cset = _knowledge_part(knowledge, "constraints")
    values: dict[str, str | None] = {
        "meta_model": to_plantuml(meta) if meta is not None else None,
        "symbols": rep.symbols.render() if rep is not None else None,
        "syntax": rep.syntax_text if rep is not None else None,
        "constraints": (
            render_constraint(constraint)
            if constraint is not None
            else "\n".join(render_constraint(c) for c in cset) if cset is not None else None
        ),
        "retrieved": render_retrieved(retrieved),
        "input_rule": input_text,
    }
    missing = [p for p in template.placeholders if values[p] is None]
    if missing:
        raise PromptError(f"template {template.id!r} needs values for {', '.join(missing)}")
    return _SLOT.sub(lambda m: values[m.group(1)], template.body)


def with_feedback(prompt: str, diagnostics: Sequence) -> str:
    lines = [f"{i}. {_describe(d)}" for i, d in enumerate(diagnostics, 1)]
    return (
        f"{prompt.rstrip()}\n\n{FEEDBACK_HEADING}\n"
        "Your previous answer was rejected by the grammar checker. Fix every item below "
        "and answer again with the complete rule list only.\n" + "\n".join(lines) + "\n"
    )


def _describe(d) -> str:
    text = f"line {d.line}, column {d.column}: {d.message}"
    if d.expected:
        text += f" (expected one of: {', '.join(d.expected)})"
    return text


def with_reformat_request(prompt: str, error: str) -> str:
    return (
        f"{prompt.rstrip()}\n\n{REFORMAT_HEADING}\n"
        f"Parsing failed with: {error}\nReply again using exactly the output format requested above.\n"
    )


# ---------------------------------------------------------------------------
# bundled templates

METAMODEL = PromptTemplate(
    "metamodel",
    """\
Role: you model the rules of a regulated domain for software testing.

Goal: derive a domain meta-model from the reference material below. Think step
by step: first list the rule elements, then arrange them in the tree.

Structure to produce
- One root class `Rule`.
- Exactly three middle classes: `Precondition`, `Operation`, `ExpectedResult`.
- Roughly fifteen leaf classes, each a testable attribute key (no concrete
  values). Merge overlapping concepts. Give every middle class a leaf named
  `Others` for rare elements.
- Every leaf hangs under exactly one middle class via `*--` with label `contains`.
  Other edges may use the labels constrains, dependsOn or triggers.
- Class names are UpperCamelCase and class bodies stay empty.

Output format
1. A numbered list `N. ElementName: description of at most ten words`.
2. One PlantUML block between @startuml and @enduml declaring every class.
   Attach each description as `note right of ElementName : description`.

Reference material (rule documents and sample test cases)
{retrieved}
""",
)

REPRESENTATION = PromptTemplate(
    "representation",
    """\
Role: you design formal requirement languages for a regulated domain.

Goal: define a machine-readable IF-THEN requirement representation grounded in
the meta-model below. Rules read `if <condition> then <outcome>`, where every
clause is `Key comparator Value` and Key is a leaf of the meta-model.

Output format
- A `### Symbols:` section with bullet lines
  `* Precondition: KeyA, KeyB`, `* Operation: ...`, `* ExpectedResult: ...`.
- A `### Syntax:` section with a ```BNF block whose productions
  PreconditionElement, OperationElement and ResultElement enumerate the keys.
- One worked example turning a sentence of the reference material into a rule.

Meta-model
{meta_model}

Reference material
{retrieved}
""",
)

CONSTRAINTS = PromptTemplate(
    "constraints",
    """\
Role: you decide which formal requirements can be tested automatically.

Goal: state testability constraints over the requirement representation below.
Cover completeness of condition and operation, concreteness of every value,
executability of operations, observability of results, and absence of
conflicting outcomes for identical conditions.

Output format: a numbered list. Each item is `N. Title: one-line rationale`
followed by an ```OCL block containing `context Rule` and one `inv Name:`.

Symbols
{symbols}

Syntax
{syntax}
""",
)

FORMALIZE = PromptTemplate(
    "formalize",
    """\
Role: you translate regulatory rules into the testable requirement language.

Task: rewrite the rule text at the end as one or more formal rules. Use only
the keys listed under Symbol Definition and the productions of Syntax
Definition.

#### Symbol Definition
{symbols}

#### Syntax Definition
{syntax}

#### Writing conventions
1. Start every rule with a line `rule N` (N = 1, 2, ...), then `if <condition>`
   on the next line and `then <outcome>` after it.
2. Each clause is a single `Key comparator Value` triple. The one exception is
   a divisibility check, written `Key % Modulus = Remainder`.
3. Keep every element the text mentions; repeat a key (for example two
   `Action` clauses) when the text names several values for it.
4. Use parentheses only where `or` or `not` need them.
5. Values are words that appear in the text, written as UpperCamelCase
   identifiers, numbers, times such as 09:30, or bracketed lists used with `in`.
6. Reply with the rules only, inside one code block.

#### Related material
{retrieved}

#### Rule text
{input_rule}
""",
)

TESTABILITY = PromptTemplate(
    "testability",
    """\
Role: you review formal requirements for automated testability.

Judge the formal rule below against this single criterion only:
{constraints}

Guidance: every value must be concrete (no open references to other articles,
no "other" or "unless otherwise specified", no unnamed sessions or periods);
the operation must be something a system can execute; the result must be
observable.

If the rule satisfies the criterion, reply `TESTABLE`.
Otherwise repair the rule so that it satisfies the criterion without changing
its meaning, and reply with the repaired rule in one code block using the same
`rule N / if ... / then ...` layout. If no faithful repair exists, reply
`UNREFINABLE` followed by a one-sentence reason.

Symbols
{symbols}

Rule under review
{input_rule}
""",
)

E2E_BASELINE = PromptTemplate(
    "e2e-baseline",
    """\
Role: you write compliance test cases for regulatory rules.

Produce test cases for the rule below as a JSON array of flat objects. Each
object has an integer "id", one field per rule element (repeat an element with
a numeric suffix such as "Action2" when needed) and a "Result" field of
"Success" or "Failure". Cover accepted inputs, rejected inputs and boundary
values. Output the JSON array only.

Rule
{input_rule}
""",
)

TEMPLATES = {t.id: t for t in (METAMODEL, REPRESENTATION, CONSTRAINTS, FORMALIZE, TESTABILITY, E2E_BASELINE)}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise PromptError(f"unknown template {template_id!r}; known: {', '.join(TEMPLATES)}") from None
