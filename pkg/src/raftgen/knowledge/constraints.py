"""Testability constraint sets and their aggregation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .metamodel import normalize_name

KINDS = (
    "structural-completeness",
    "determinism",
    "action-executability",
    "result-observability",
    "non-conflict",
    "custom",
)

# default id per built-in kind, named after the invariant each one checks
DEFAULT_IDS = {
    "structural-completeness": "StructuralCompleteness",
    "determinism": "RuleElementDeterministic",
    "action-executability": "ActionExecutable",
    "result-observability": "ExpectedResultObservable",
    "non-conflict": "DeterministicOutcome",
}


@dataclass(frozen=True)
class TestabilityConstraint:
    id: str
    name: str
    kind: str
    ocl_text: str = ""
    params: Mapping[str, Any] = field(default_factory=dict)

    __test__ = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if not self.id:
            raise ValueError("constraint id must not be empty")


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[TestabilityConstraint, ...] = ()
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        ids = [c.id for c in self.constraints]
        if len(ids) != len(set(ids)):
            raise ValueError(f"constraint ids must be unique: {ids}")

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def by_kind(self, kind: str) -> list[TestabilityConstraint]:
        return [c for c in self.constraints if c.kind == kind]

    def get(self, cid: str) -> TestabilityConstraint | None:
        return next((c for c in self.constraints if c.id == cid), None)

    def without(self, *ids: str) -> ConstraintSet:
        return ConstraintSet(tuple(c for c in self.constraints if c.id not in ids), self.provenance)


def infer_kind(*names: str) -> str:
    """Guess a built-in kind from a constraint's title or invariant name."""
    text = " ".join(" ".join(normalize_name(n)) for n in names if n)
    if re.search(r"conflict|outcome|unambigu|consisten", text):
        return "non-conflict"
    if re.search(r"structur|complete", text):
        return "structural-completeness"
    if re.search(r"executab|action", text):
        return "action-executability"
    if re.search(r"observab|verifiab", text):
        return "result-observability"
    if re.search(r"determinis|concrete|ambigu|vague", text):
        return "determinism"
    return "custom"


_HEADING = re.compile(r"^\s*(?:#+\s*)?(\d+)[.)]\s*\**([^:*\n]+?)\**\s*(?::\s*(.*))?$", re.M)
_INV = re.compile(r"\binv\s+(\w+)\s*:")


def parse_constraints_text(text: str, provenance: str = "") -> ConstraintSet:
    """Read numbered constraints with their OCL bodies from free text.

    Each ``N. Title: summary`` heading starts a constraint; the text up to
    the next heading (typically an OCL code block) becomes ``ocl_text``.
    """
    heads = list(_HEADING.finditer(text))
    out: list[TestabilityConstraint] = []
    used: set[str] = set()
    for i, m in enumerate(heads):
        body = text[m.end(): heads[i + 1].start() if i + 1 < len(heads) else len(text)]
        title = m.group(2).strip()
        inv = _INV.search(body)
        if not inv and "context" not in body and "::" not in body and not m.group(3):
            continue
        ocl = "\n".join(l for l in body.strip().splitlines() if not l.strip().startswith("```")).strip()
        kind = infer_kind(title, inv.group(1) if inv else "")
        cid = inv.group(1) if inv else "".join(w.capitalize() for w in re.findall(r"\w+", title))
        base, n = cid, 2
        while cid in used:
            cid, n = f"{base}{n}", n + 1
        used.add(cid)
        params = {"summary": m.group(3).strip()} if m.group(3) else {}
        out.append(TestabilityConstraint(cid, title, kind, ocl, params))
    if not out:
        raise ValueError("no testability constraints found")
    return ConstraintSet(tuple(out), provenance)


def aggregate_constraints(sets: Sequence[ConstraintSet]) -> ConstraintSet:
    """Union of constraint sets, deduplicated by (kind, normalized name).

    Custom constraints are only merged when name and OCL text both match.
    Output is ordered by kind, then first appearance.
    """
    if not sets:
        raise ValueError("aggregate_constraints needs at least one constraint set")
    seen: dict[tuple, TestabilityConstraint] = {}
    for cs in sets:
        for c in cs:
            key = (c.kind, normalize_name(c.name))
            if c.kind == "custom":
                key += (c.ocl_text.strip(),)
            seen.setdefault(key, c)
    ordered = sorted(seen.values(), key=lambda c: KINDS.index(c.kind))
    used: set[str] = set()
    out = []
    for c in ordered:
        cid, n = c.id, 2
        while cid in used:
            cid, n = f"{c.id}{n}", n + 1
        used.add(cid)
        out.append(c if cid == c.id else TestabilityConstraint(cid, c.name, c.kind, c.ocl_text, c.params))
    return ConstraintSet(tuple(out), "aggregated")
