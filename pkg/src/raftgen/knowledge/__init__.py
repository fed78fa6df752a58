"""Knowledge artifacts: meta-models, requirement representations, testability constraints."""

from .constraints import (
    KINDS,
    ConstraintSet,
    TestabilityConstraint,
    aggregate_constraints,
    infer_kind,
    parse_constraints_text,
)
from .io import SCHEMA_VERSION, SchemaError
from .metamodel import (
    MIDDLE,
    OTHERS,
    ROOT,
    MetaElement,
    MetaModel,
    MetaModelError,
    Relation,
    bucket_others,
    k_purify,
    match_elements,
    normalize_name,
    validate,
)
from .pack import KnowledgePack, copy_finance_sources, finance_pack, finance_text, load_pack
from .plantuml import PlantUMLError, from_plantuml, parse_plantuml, to_plantuml
from .representation import (
    Representation,
    RepresentationError,
    SymbolLibrary,
    aggregate_representations,
    parse_representation_text,
    render_syntax,
)

__all__ = [
    "KINDS",
    "MIDDLE",
    "OTHERS",
    "ROOT",
    "SCHEMA_VERSION",
    "ConstraintSet",
    "KnowledgePack",
    "MetaElement",
    "MetaModel",
    "MetaModelError",
    "PlantUMLError",
    "Relation",
    "Representation",
    "RepresentationError",
    "SchemaError",
    "SymbolLibrary",
    "TestabilityConstraint",
    "aggregate_constraints",
    "aggregate_representations",
    "bucket_others",
    "copy_finance_sources",
    "finance_pack",
    "finance_text",
    "from_plantuml",
    "infer_kind",
    "k_purify",
    "load_pack",
    "match_elements",
    "normalize_name",
    "parse_constraints_text",
    "parse_plantuml",
    "parse_representation_text",
    "render_syntax",
    "to_plantuml",
    "validate",
]
