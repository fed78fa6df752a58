"""Three-layer domain meta-models and majority-consensus purification.

A meta-model is a tree ``Rule -> {Precondition, Operation, ExpectedResult}
-> leaf elements``.  Several independently produced meta-models are
reconciled by keeping the elements that at least ``k`` of them agree on;
the rest become candidates for a per-category ``Others`` leaf.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

ROOT = "Rule"
MIDDLE = ("Precondition", "Operation", "ExpectedResult")
OTHERS = "Others"
RELATION_KINDS = ("contains", "constrains", "dependsOn", "triggers", "generalizes", "other")

_WORD = re.compile(r"[A-Z]+(?=[A-Z][a-z]|\d|\b|_)|[A-Z]?[a-z]+|[A-Z]+|\d+")


class MetaModelError(ValueError):
    """A meta-model violates the three-layer structure."""


@dataclass(frozen=True)
class MetaElement:
    name: str
    category: str
    description: str = ""
    support: int = 0

    def __post_init__(self):
        if not self.name:
            raise MetaModelError("element name must not be empty")
        if self.support < 0:
            raise MetaModelError("support must be non-negative")


@dataclass(frozen=True)
class Relation:
    """Directed edge between two node ids.

    ``label`` is free text kept only for ``contains``, ``generalizes`` and
    ``other`` edges; for the named kinds the kind itself is the label.
    """

    source: str
    target: str
    kind: str = "contains"
    label: str = ""

    def __post_init__(self):
        kind, label = self.kind, self.label.strip()
        if kind == "other" and label in RELATION_KINDS:
            kind, label = label, ""
        if kind not in RELATION_KINDS:
            raise MetaModelError(f"unknown relation kind {kind!r}")
        if label == kind or kind in ("constrains", "dependsOn", "triggers"):
            label = ""
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "label", label)


@dataclass(frozen=True)
class MetaModel:
    elements: tuple[MetaElement, ...] = ()
    relations: tuple[Relation, ...] = ()
    provenance: str = ""
    root: str = ROOT
    middle: tuple[str, ...] = MIDDLE
    extra_classes: tuple[str, ...] = ()
    # low-support elements dropped by purification, awaiting bucket_others
    candidates: tuple[MetaElement, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("elements", "relations", "middle", "extra_classes", "candidates"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @classmethod
    def build(
        cls,
        elements: Iterable[MetaElement],
        relations: Iterable[Relation] = (),
        provenance: str = "",
        **kwargs,
    ) -> MetaModel:
        """Create a model, adding the ``contains`` edge for every element."""
        elements = tuple(elements)
        probe = cls(elements)
        contains = tuple(Relation(e.category, probe.node_id(e), "contains") for e in elements)
        return cls(elements, contains + tuple(relations), provenance, **kwargs)

    def node_id(self, element: MetaElement) -> str:
        """Identifier of *element* in diagrams and relation endpoints.

        Names that repeat across categories (always the case for ``Others``)
        are qualified as ``Category_Name``.
        """
        if element.name == OTHERS or sum(e.name == element.name for e in self.elements) > 1:
            return f"{element.category}_{element.name}"
        return element.name

    def resolve(self, node: str) -> MetaElement | str | None:
        if node == self.root or node in self.middle or node in self.extra_classes:
            return node
        for e in self.elements:
            if self.node_id(e) == node:
                return e
        return None

    @property
    def classes(self) -> tuple[str, ...]:
        return (self.root, *self.middle, *(self.node_id(e) for e in self.elements), *self.extra_classes)

    def by_category(self, category: str) -> list[MetaElement]:
        return [e for e in self.elements if e.category == category]

    def structure(self):
        """Hashable summary used for structural equality (ignores support and order)."""
        return (
            self.root,
            tuple(self.middle),
            frozenset((e.name, e.category, e.description) for e in self.elements),
            frozenset(self.relations),
            frozenset(self.extra_classes),
        )


def validate(model: MetaModel) -> list[str]:
    """Structural problems of *model*; an empty list means it is well formed."""
    problems = []
    if model.root != ROOT:
        problems.append(f"root must be {ROOT!r}, not {model.root!r}")
    if tuple(model.middle) != MIDDLE:
        problems.append(f"middle layer must be {MIDDLE}")
    seen = set()
    others_per_cat: dict[str, int] = {}
    for e in model.elements:
        if e.category not in MIDDLE:
            problems.append(f"element {e.name} has unknown category {e.category!r}")
        if e.name in (model.root, *model.middle):
            problems.append(f"element name {e.name} clashes with a layer name")
        if (e.name, e.category) in seen:
            problems.append(f"duplicate element {e.name} in {e.category}")
        seen.add((e.name, e.category))
        if e.name == OTHERS:
            others_per_cat[e.category] = others_per_cat.get(e.category, 0) + 1
    for cat, n in others_per_cat.items():
        if n > 1:
            problems.append(f"{cat} has {n} Others elements")
    parents: dict[str, list[str]] = {}
    for r in model.relations:
        for end in (r.source, r.target):
            if model.resolve(end) is None:
                problems.append(f"relation endpoint {end!r} is not declared")
        if r.kind == "contains" and isinstance(model.resolve(r.target), MetaElement):
            parents.setdefault(r.target, []).append(r.source)
    for e in model.elements:
        node = model.node_id(e)
        ps = parents.get(node, [])
        if ps != [e.category]:
            problems.append(f"element {node} must have exactly one contains parent {e.category}, has {ps}")
    return problems


def _split_words(name: str) -> list[str]:
    return [w.lower() for w in _WORD.findall(name)] or [name.lower()]


def _singular(word: str) -> str:
    if len(word) > 4 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def normalize_name(name: str, synonyms: Mapping[str, str] | None = None) -> tuple[str, ...]:
    """Word multiset of an UpperCamelCase name, singularized, synonym-mapped."""
    syn = {k.lower(): v.lower() for k, v in (synonyms or {}).items()}
    words = []
    for w in _split_words(name):
        w = syn.get(w, w)
        w = _singular(w)
        words.append(syn.get(w, w))
    return tuple(sorted(words))


def match_elements(a: MetaElement, b: MetaElement, synonyms: Mapping[str, str] | None = None) -> bool:
    return a.category == b.category and normalize_name(a.name, synonyms) == normalize_name(
        b.name, synonyms
    )


def _endpoint_key(model: MetaModel, node: str, synonyms):
    target = model.resolve(node)
    if isinstance(target, MetaElement):
        return ("element", target.category, normalize_name(target.name, synonyms))
    return ("class", node)


def k_purify(
    models: Sequence[MetaModel],
    k: int,
    synonyms: Mapping[str, str] | None = None,
) -> MetaModel:
    """Keep the elements and relations supported by at least *k* models.

    Elements supported by fewer than *k* (but at least one) models are
    returned in ``candidates`` for :func:`bucket_others`.
    """
    if not models:
        raise ValueError("k_purify needs at least one meta-model")
    if not 1 < k <= len(models):
        raise ValueError(f"consensus threshold k={k} must satisfy 1 < k <= {len(models)}")
    for i, m in enumerate(models):
        problems = validate(m)
        if problems:
            raise MetaModelError(f"meta-model {i} is malformed: {problems[0]}")

    groups: dict[tuple, dict] = {}
    for i, m in enumerate(models):
        for e in m.elements:
            key = (e.category, normalize_name(e.name, synonyms))
            g = groups.setdefault(key, {"element": e, "models": set()})
            g["models"].add(i)
            if not g["element"].description and e.description:
                g["element"] = replace(g["element"], description=e.description)

    kept, candidates = [], []
    kept_keys = set()
    for key, g in groups.items():
        support = len(g["models"])
        el = replace(g["element"], support=support)
        if support >= k:
            kept.append(el)
            kept_keys.add(("element", *key))
        else:
            candidates.append(el)

    extra_support: dict[str, set[int]] = {}
    for i, m in enumerate(models):
        for c in m.extra_classes:
            extra_support.setdefault(c, set()).add(i)
    extras = tuple(c for c, s in extra_support.items() if len(s) >= k)
    kept_keys.update(("class", c) for c in (ROOT, *MIDDLE, *extras))

    rel_groups: dict[tuple, dict] = {}
    for i, m in enumerate(models):
        for r in m.relations:
            key = (_endpoint_key(m, r.source, synonyms), _endpoint_key(m, r.target, synonyms), r.kind)
            g = rel_groups.setdefault(key, {"label": r.label, "models": set()})
            g["models"].add(i)

    out = MetaModel(tuple(kept), (), "purified", extra_classes=extras)
    lookup = {("element", e.category, normalize_name(e.name, synonyms)): out.node_id(e) for e in kept}
    relations = []
    for (src, dst, kind), g in rel_groups.items():
        if len(g["models"]) < k or src not in kept_keys or dst not in kept_keys:
            continue
        relations.append(
            Relation(lookup.get(src, src[-1]), lookup.get(dst, dst[-1]), kind, g["label"])
        )
    log.debug("purified %d models at k=%d: %d kept, %d candidates", len(models), k, len(kept), len(candidates))
    return replace(out, relations=tuple(relations), candidates=tuple(candidates))


def _others_groups(description: str) -> list[str]:
    m = re.search(r"groups:\s*(.*)$", description)
    if not m:
        return []
    return [s.strip() for s in m.group(1).split(",") if s.strip()]


def bucket_others(purified: MetaModel, candidates: Sequence[MetaElement]) -> MetaModel:
    """Fold low-support *candidates* into one ``Others`` leaf per category."""
    elements = list(purified.elements)
    relations = list(purified.relations)
    for cat in MIDDLE:
        names = [c.name for c in candidates if c.category == cat and c.name != OTHERS]
        if not names:
            continue
        idx = next((i for i, e in enumerate(elements) if e.name == OTHERS and e.category == cat), None)
        if idx is None:
            support = max(c.support for c in candidates if c.category == cat)
            elements.append(MetaElement(OTHERS, cat, "", support))
            relations.append(Relation(cat, f"{cat}_{OTHERS}", "contains"))
            idx = len(elements) - 1
        current = elements[idx]
        grouped = _others_groups(current.description)
        merged = grouped + [n for n in names if n not in grouped]
        prefix = current.description.split("groups:")[0].rstrip("; ").strip()
        listing = "groups: " + ", ".join(merged)
        elements[idx] = replace(current, description=f"{prefix}; {listing}" if prefix else listing)
    return replace(purified, elements=tuple(elements), relations=tuple(relations))
