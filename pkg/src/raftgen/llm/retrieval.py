"""Lexical retrieval over regulatory documents and historical test cases."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

_TOKEN = re.compile(r"\w+")


def terms(text: str) -> Counter:
    return Counter(t.lower() for t in _TOKEN.findall(text))


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    start: int
    end: int
    text: str
    counts: Counter = field(compare=False, repr=False, default_factory=Counter)


@dataclass(frozen=True)
class RetrievalIndex:
    chunks: tuple[Chunk, ...] = ()
    size: int = 1500
    overlap: int = 200


def _windows(n: int, size: int, overlap: int) -> Iterable[tuple[int, int]]:
    if n == 0:
        return
    step = size - overlap
    start = 0
    while True:
        end = min(start + size, n)
        yield start, end
        if end == n:
            return
        start += step


def build_index(docs: Mapping[str, str] | Iterable[tuple[str, str]], size: int = 1500, overlap: int = 200) -> RetrievalIndex:
    """Split each document into overlapping character windows."""
    if size <= 0 or not 0 <= overlap < size:
        raise ValueError("need size > 0 and 0 <= overlap < size")
    items = docs.items() if isinstance(docs, Mapping) else docs
    chunks = []
    for doc_id, text in items:
        for start, end in _windows(len(text), size, overlap):
            piece = text[start:end]
            chunks.append(Chunk(doc_id, start, end, piece, terms(piece)))
    return RetrievalIndex(tuple(chunks), size, overlap)


def cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    if not dot:
        return 0.0
    return dot / (math.sqrt(sum(v * v for v in a.values())) * math.sqrt(sum(v * v for v in b.values())))


def rank(index: RetrievalIndex, query: str) -> list[tuple[Chunk, float]]:
    """Every chunk with its score, best first; ties keep document order."""
    q = terms(query)
    scored = [(ch, cosine(q, ch.counts)) for ch in index.chunks]
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    return [scored[i] for i in order]


def retrieve(index: RetrievalIndex, query: str, top_k: int = 5, include_zero: bool = False) -> list[Chunk]:
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    ranked = rank(index, query)
    if not include_zero:
        ranked = [(c, s) for c, s in ranked if s > 0]
    return [c for c, _ in ranked[:top_k]]
