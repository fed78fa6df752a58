from __future__ import annotations

import enum

from .model import base_key


class Category(enum.Enum):
    PRECONDITION = "Precondition"
    OPERATION = "Operation"
    EXPECTED_RESULT = "ExpectedResult"
    UNKNOWN = "Unknown"


# shared keys resolve to the first category that lists them
PRIORITY = (Category.PRECONDITION, Category.OPERATION, Category.EXPECTED_RESULT)


def key_categories(key: str, symbols) -> list[Category]:
    """Every middle-layer category whose vocabulary lists *key* (suffix stripped)."""
    found = []
    for name in (key, base_key(key)):
        for cat in PRIORITY:
            if name in symbols.domain.get(cat.value, ()) and cat not in found:
                found.append(cat)
        if found:
            break
    return found


def classify_key(key: str, symbols) -> Category:
    cats = key_categories(key, symbols)
    return cats[0] if cats else Category.UNKNOWN
