"""PlantUML class-diagram form of meta-models.

Only the subset the explication prompts ask for is understood: class
declarations (optionally ``class "Name" as Alias``), the arrows ``*--``,
``o--``, ``--``, ``-->``, ``..>``, ``--|>`` and ``<|--`` with an optional
``: label``, and ``note ... of X : text`` lines carrying descriptions.
Anything else is reported as a warning and skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .metamodel import (
    MIDDLE,
    RELATION_KINDS,
    ROOT,
    MetaElement,
    MetaModel,
    Relation,
)


class PlantUMLError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics if d.severity == "error"))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str
    severity: str = "warning"

    def __str__(self) -> str:
        return f"line {self.line}: {self.severity}: {self.message}"


_CLASS = re.compile(
    r'^(?:abstract\s+class|class|interface|entity)\s+(?:"(?P<display>[^"]+)"\s+as\s+(?P<alias>\w+)|(?P<name>\w+))'
    r"(?:\s*<<[^>]*>>)?\s*(?:\{\s*\}?)?$"
)
_ARROW = re.compile(
    r'^(?P<a>\w+)\s*(?:"[^"]*"\s*)?(?P<arrow>\*--|o--|--\|>|<\|--|-->|\.\.>|--|\.\.)\s*(?:"[^"]*"\s*)?(?P<b>\w+)'
    r"\s*(?::\s*(?P<label>.*?))?\s*$"
)
_NOTE = re.compile(r"^note\s+(?:left|right|top|bottom)\s+of\s+(?P<target>\w+)\s*:\s*(?P<text>.*)$")
_IGNORED = re.compile(r"^(skinparam|hide|show|title|left to right|top to bottom|'|!)")


def _relation_kind(label: str, default: str) -> tuple[str, str]:
    if label in RELATION_KINDS and label != "other":
        return label, ""
    return default, label


def parse_plantuml(text: str) -> tuple[MetaModel, list[Diagnostic]]:
    """Parse a class diagram into a MetaModel plus diagnostics.

    Classes contained by one of the three middle-layer classes become leaf
    elements of that category; any other class is kept in ``extra_classes``.
    """
    diags: list[Diagnostic] = []
    lines = text.splitlines()
    starts = [i for i, l in enumerate(lines) if l.strip().startswith("@startuml")]
    ends = [i for i, l in enumerate(lines) if l.strip().startswith("@enduml")]
    if len(starts) != 1 or len(ends) != 1 or ends[0] < starts[0]:
        diags.append(Diagnostic(1, "unbalanced @startuml/@enduml", "error"))
        return MetaModel(), diags
    declared: dict[str, str] = {}
    order: list[str] = []
    edges: list[tuple[int, str, str, str, str]] = []
    notes: dict[str, str] = {}
    for lineno in range(starts[0] + 1, ends[0]):
        raw = lines[lineno].strip()
        n = lineno + 1
        if not raw or _IGNORED.match(raw):
            continue
        m = _CLASS.match(raw)
        if m:
            ident = m.group("alias") or m.group("name")
            if ident not in declared:
                order.append(ident)
            declared[ident] = m.group("display") or ident
            continue
        m = _ARROW.match(raw)
        if m:
            a, b, arrow = m.group("a"), m.group("b"), m.group("arrow")
            label = (m.group("label") or "").strip()
            if arrow == "<|--":
                a, b, kind, label = b, a, "generalizes", label
            elif arrow == "--|>":
                kind = "generalizes"
            elif arrow in ("*--", "o--"):
                kind, label = _relation_kind(label, "contains")
            else:
                kind, label = _relation_kind(label, "other")
            edges.append((n, a, b, kind, label))
            continue
        m = _NOTE.match(raw)
        if m:
            notes[m.group("target")] = m.group("text").strip()
            continue
        diags.append(Diagnostic(n, f"unsupported PlantUML syntax skipped: {raw!r}"))

    for n, a, b, _, _ in edges:
        for end in (a, b):
            if end not in declared:
                diags.append(Diagnostic(n, f"arrow references undeclared class {end!r}", "error"))
    if any(d.severity == "error" for d in diags):
        return MetaModel(), diags

    category: dict[str, str] = {}
    for _, a, b, kind, _ in edges:
        if kind == "contains" and a in MIDDLE and b not in (ROOT, *MIDDLE):
            if b in category and category[b] != a:
                diags.append(Diagnostic(0, f"class {b} is contained by both {category[b]} and {a}"))
                continue
            category[b] = a
    for name in (ROOT, *MIDDLE):
        if name not in declared:
            diags.append(Diagnostic(0, f"layer class {name} not declared; diagram is not a three-layer meta-model"))

    elements = []
    ident_of: dict[str, MetaElement] = {}
    for ident in order:
        if ident in category:
            el = MetaElement(declared[ident], category[ident], notes.get(ident, ""))
            elements.append(el)
            ident_of[ident] = el
    extras = tuple(i for i in order if i not in category and i not in (ROOT, *MIDDLE))
    model = MetaModel(tuple(elements), extra_classes=extras)
    # map diagram identifiers onto the model's own node ids
    rename = {ident: model.node_id(el) for ident, el in ident_of.items()}
    relations = []
    for _, a, b, kind, label in edges:
        if a == ROOT and b in MIDDLE and kind == "contains":
            continue
        relations.append(Relation(rename.get(a, a), rename.get(b, b), kind, label))
    return MetaModel(tuple(elements), tuple(relations), extra_classes=extras), diags


def from_plantuml(text: str) -> MetaModel:
    """Like :func:`parse_plantuml` but raises :class:`PlantUMLError` on errors."""
    model, diags = parse_plantuml(text)
    if any(d.severity == "error" for d in diags):
        raise PlantUMLError(diags)
    return model


def _class_decl(model: MetaModel, el: MetaElement) -> str:
    node = model.node_id(el)
    if node == el.name:
        return f"class {node}"
    return f'class "{el.name}" as {node}'


def to_plantuml(model: MetaModel) -> str:
    lines = ["@startuml", f"class {model.root}"]
    lines += [f"class {m}" for m in model.middle]
    lines += [_class_decl(model, e) for e in model.elements]
    lines += [f"class {c}" for c in model.extra_classes]
    lines.append("")
    lines += [f"{model.root} *-- {m} : contains" for m in model.middle]
    for r in model.relations:
        label = r.label or (r.kind if r.kind not in ("generalizes", "other") else "")
        if r.kind == "generalizes":
            arrow = "--|>"
        elif r.kind == "contains":
            arrow = "*--"
        elif r.kind == "other":
            arrow = "--"
        else:
            arrow = "-->"
        lines.append(f"{r.source} {arrow} {r.target}" + (f" : {label}" if label else ""))
    notes = [(model.node_id(e), e.description) for e in model.elements if e.description]
    if notes:
        lines.append("")
        lines += [f"note right of {node} : {text}" for node, text in notes]
    lines.append("@enduml")
    return "\n".join(lines) + "\n"
