"""A knowledge pack bundles the three artifacts a pipeline run depends on."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import io
from .constraints import ConstraintSet, parse_constraints_text
from .metamodel import MIDDLE, OTHERS, MetaElement, MetaModel
from .plantuml import to_plantuml
from .representation import Representation, SymbolLibrary, parse_representation_text

METAMODEL_JSON = "metamodel.json"
METAMODEL_PUML = "metamodel.puml"
REPRESENTATION_JSON = "representation.json"
CONSTRAINTS_JSON = "constraints.json"
PACK_FILES = (METAMODEL_JSON, METAMODEL_PUML, REPRESENTATION_JSON, CONSTRAINTS_JSON)


@dataclass(frozen=True)
class KnowledgePack:
    metamodel: MetaModel
    representation: Representation
    constraints: ConstraintSet

    @property
    def symbols(self) -> SymbolLibrary:
        return self.representation.symbols

    def save(self, directory: str | Path) -> dict[str, str]:
        """Write the pack and return ``{file name: sha256}``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        texts = {
            METAMODEL_JSON: io.dumps(io.metamodel_to_dict(self.metamodel)),
            METAMODEL_PUML: to_plantuml(self.metamodel),
            REPRESENTATION_JSON: io.dumps(io.representation_to_dict(self.representation)),
            CONSTRAINTS_JSON: io.dumps(io.constraints_to_dict(self.constraints)),
        }
        for name, text in texts.items():
            (d / name).write_text(text, encoding="utf-8")
        return {name: hashlib.sha256(text.encode()).hexdigest() for name, text in texts.items()}


def load_pack(directory: str | Path) -> KnowledgePack:
    d = Path(directory)
    missing = [n for n in (METAMODEL_JSON, REPRESENTATION_JSON, CONSTRAINTS_JSON) if not (d / n).is_file()]
    if missing:
        raise FileNotFoundError(f"knowledge pack {d} is missing {', '.join(missing)}")
    return KnowledgePack(
        io.metamodel_from_dict(io.read_json(d / METAMODEL_JSON)),
        io.representation_from_dict(io.read_json(d / REPRESENTATION_JSON)),
        io.constraints_from_dict(io.read_json(d / CONSTRAINTS_JSON)),
    )


# --- bundled finance pack -------------------------------------------------

FINANCE_FILES = ("finance_metamodel.puml", "representation.md", "constraints.md")

_FINANCE_TYPES = {
    "Quantity": "number",
    "Price": "number",
    "Time": "time",
}
_FINANCE_VALUES = {"Result": ("Success", "Failure")}
# keys whose clauses name an operation the system under test performs
_FINANCE_ACTIONLIKE = frozenset({"TradingMethod", "TradingDirection"})
_FINANCE_DESCRIPTIONS = {
    "Actor": "party performing or subject to the rule",
    "TradingInstrument": "security or product being traded",
    "TradingMarket": "market or venue of the trade",
    "Time": "trading time, session or date",
    "Constraint": "additional restriction on the rule",
    "Event": "triggering business event",
    "Action": "operation performed by the actor",
    "TradingDirection": "buy or sell side",
    "TradingMethod": "execution method of the trade",
    "Quantity": "submitted amount or share count",
    "Price": "submitted or reference price",
    "OperationPart": "object the operation applies to",
    "Status": "order or trade state",
    "ResultStatus": "observable status after the operation",
    "Result": "success or failure of the operation",
}


def finance_text(name: str) -> str:
    """Raw text of one bundled finance artifact."""
    if name not in FINANCE_FILES:
        raise KeyError(name)
    return resources.files("raftgen.data").joinpath("finance", name).read_text(encoding="utf-8")


def _finance_metamodel(symbols: SymbolLibrary) -> MetaModel:
    elements = []
    seen = set()
    for cat in MIDDLE:
        for key in symbols.domain[cat]:
            if key in seen:
                continue
            seen.add(key)
            elements.append(MetaElement(key, cat, _FINANCE_DESCRIPTIONS.get(key, ""), 3))
        elements.append(MetaElement(OTHERS, cat, "low-frequency elements", 3))
    return MetaModel.build(elements, provenance="builtin:finance")


def finance_pack() -> KnowledgePack:
    """Default finance pack built from the bundled source files."""
    parsed = parse_representation_text(finance_text("representation.md"))
    s = parsed.symbols
    symbols = SymbolLibrary(s.domain, _FINANCE_TYPES, _FINANCE_VALUES, _FINANCE_ACTIONLIKE, s.shared)
    rep = Representation(symbols, provenance="builtin:finance")
    constraints = parse_constraints_text(finance_text("constraints.md"), "builtin:finance")
    return KnowledgePack(_finance_metamodel(symbols), rep, constraints)


def copy_finance_sources(directory: str | Path) -> list[Path]:
    """Copy the bundled artifacts unchanged into *directory*."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for name in FINANCE_FILES:
        target = d / name
        target.write_text(finance_text(name), encoding="utf-8")
        out.append(target)
    return out
