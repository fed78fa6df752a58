"""Canonical JSON documents for meta-models, representations and constraint sets."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .constraints import ConstraintSet, TestabilityConstraint
from .metamodel import MetaElement, MetaModel, Relation
from .representation import Representation, SymbolLibrary

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _check(doc: dict, kind: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaError(f"{kind} document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported {kind} schema_version {version!r}, expected {SCHEMA_VERSION}")


def metamodel_to_dict(m: MetaModel) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "provenance": m.provenance,
        "root": m.root,
        "middle": list(m.middle),
        "elements": [
            {"name": e.name, "category": e.category, "description": e.description, "support": e.support}
            for e in m.elements
        ],
        "relations": [
            {"from": r.source, "to": r.target, "kind": r.kind, **({"label": r.label} if r.label else {})}
            for r in m.relations
        ],
        "extra_classes": list(m.extra_classes),
    }


def metamodel_from_dict(doc: dict) -> MetaModel:
    _check(doc, "meta-model")
    try:
        elements = tuple(
            MetaElement(e["name"], e["category"], e.get("description", ""), int(e.get("support", 0)))
            for e in doc["elements"]
        )
        relations = tuple(
            Relation(r["from"], r["to"], r.get("kind", "contains"), r.get("label", ""))
            for r in doc["relations"]
        )
        return MetaModel(
            elements,
            relations,
            doc.get("provenance", ""),
            doc.get("root", "Rule"),
            tuple(doc.get("middle", ())),
            tuple(doc.get("extra_classes", ())),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed meta-model document: {exc}") from exc


def representation_to_dict(rep: Representation) -> dict[str, Any]:
    s = rep.symbols
    return {
        "schema_version": SCHEMA_VERSION,
        "provenance": rep.provenance,
        "symbols": {
            "logical": list(s.logical),
            "comparators": list(s.comparators),
            "domain": {cat: list(keys) for cat, keys in s.domain.items()},
            "types": dict(s.types),
            "value_domains": {k: list(v) for k, v in s.value_domains.items()},
            "actionlike": sorted(s.actionlike),
            "shared": sorted(s.shared),
        },
        "syntax_text": rep.syntax_text,
    }


def representation_from_dict(doc: dict) -> Representation:
    _check(doc, "representation")
    try:
        s = doc["symbols"]
        symbols = SymbolLibrary(
            {cat: tuple(keys) for cat, keys in s["domain"].items()},
            dict(s.get("types", {})),
            {k: tuple(v) for k, v in s.get("value_domains", {}).items()},
            frozenset(s.get("actionlike", ())),
            frozenset(s.get("shared", ())),
        )
        return Representation(symbols, doc.get("syntax_text", ""), doc.get("provenance", ""))
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"malformed representation document: {exc}") from exc


def constraints_to_dict(cs: ConstraintSet) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "provenance": cs.provenance,
        "constraints": [
            {"id": c.id, "name": c.name, "kind": c.kind, "ocl_text": c.ocl_text, "params": dict(c.params)}
            for c in cs
        ],
    }


def constraints_from_dict(doc: dict) -> ConstraintSet:
    _check(doc, "constraint set")
    try:
        items = tuple(
            TestabilityConstraint(c["id"], c.get("name", c["id"]), c["kind"], c.get("ocl_text", ""), dict(c.get("params", {})))
            for c in doc["constraints"]
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed constraint set document: {exc}") from exc
    return ConstraintSet(items, doc.get("provenance", ""))


def dumps(doc: Any) -> str:
    """Stable JSON text: two-space indent, UTF-8, trailing newline."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
