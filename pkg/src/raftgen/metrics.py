"""Scoring generated suites and formal rules against ground truth."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Callable, Iterable, Mapping, Sequence

import networkx as nx

from .llm.providers import CallRecord, UsageStats
from .testgen import Scenario, TestCase, case_record
from .trl import Rule, base_key, satisfies
from .trl.lexer import token_texts

log = logging.getLogger(__name__)

_WS = re.compile(r"\s+")
_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class MatchConfig:
    """How two flat case maps are compared.

    ``mode`` is ``exact`` (equal normalized maps) or ``subset`` (every
    generated key/value appears in the truth case).
    """

    mode: str = "exact"
    strip_suffix: bool = True
    synonyms: Mapping[str, str] = field(default_factory=dict)
    fold_key_case: bool = True
    fold_value_case: bool = False
    canonical_numbers: bool = True
    fold_whitespace: bool = True
    ignore: tuple[str, ...] = ("id",)

    def __post_init__(self):
        if self.mode not in ("exact", "subset"):
            raise ValueError(f"unknown match mode {self.mode!r}")

    def key(self, k: str) -> str:
        k = self.synonyms.get(k, k)
        if self.strip_suffix:
            k = base_key(k)
        k = self.synonyms.get(k, k)
        return k.casefold() if self.fold_key_case else k

    def value(self, v: Any) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        text = v if isinstance(v, str) else json.dumps(v, sort_keys=True) if isinstance(v, (list, dict)) else str(v)
        if self.fold_whitespace:
            text = _WS.sub(" ", text).strip()
        if self.canonical_numbers:
            try:
                d = Decimal(text)
            except InvalidOperation:
                pass
            else:
                if d.is_finite():
                    text = format(d.normalize(), "f") if d != 0 else "0"
        return text.casefold() if self.fold_value_case else text

    def normalize(self, record: Mapping[str, Any]) -> tuple[tuple[str, str], ...]:
        """Sorted multiset of normalized (key, value) pairs; idempotent on its output."""
        skip = {self.key(k) for k in self.ignore}
        pairs = [(self.key(k), self.value(v)) for k, v in record.items()]
        return tuple(sorted(p for p in pairs if p[0] not in skip))


@dataclass
class Matching:
    pairs: list[tuple[Any, Any]]
    unmatched_generated: list[Any]
    unmatched_truth: list[Any]
    n_generated: int
    n_truth: int
    skipped_truth: int = 0
    mode: str = "exact"

    def __len__(self) -> int:
        return len(self.pairs)


def _record(case) -> dict:
    if isinstance(case, TestCase):
        return case_record(case)
    if isinstance(case, Mapping):
        return dict(case)
    raise TypeError(f"not a test case: {case!r}")


def _subset(small: tuple, big: tuple) -> bool:
    need = Counter(small)
    have = Counter(big)
    return all(have[k] >= n for k, n in need.items())


def match_cases(generated: Sequence, truth: Sequence[Mapping], cfg: MatchConfig | None = None) -> Matching:
    """Maximum one-to-one matching between generated and truth cases.

    Truth records without an ``id`` are skipped with a warning.  Pairs are
    reported as (generated id, truth id); generated cases without an id are
    identified by position.
    """
    cfg = cfg or MatchConfig()
    gen = [_record(c) for c in generated]
    kept, skipped = [], 0
    for i, t in enumerate(truth):
        if not isinstance(t, Mapping) or "id" not in t:
            log.warning("truth record %d has no id; skipped", i)
            skipped += 1
            continue
        kept.append(dict(t))
    gid = [g.get("id", i) for i, g in enumerate(gen)]
    tid = [t["id"] for t in kept]
    gnorm = [cfg.normalize(g) for g in gen]
    tnorm = [cfg.normalize(t) for t in kept]
    pairs: list[tuple[int, int]] = []
    if cfg.mode == "exact":
        # equality classes: greedy pairing within a class is already maximum
        pool: dict[tuple, list[int]] = defaultdict(list)
        for j, n in enumerate(tnorm):
            pool[n].append(j)
        for i, n in enumerate(gnorm):
            if pool.get(n):
                pairs.append((i, pool[n].pop(0)))
    else:
        graph = nx.Graph()
        left = [("g", i) for i in range(len(gen))]
        graph.add_nodes_from(left, bipartite=0)
        graph.add_nodes_from((("t", j) for j in range(len(kept))), bipartite=1)
        for i, gn in enumerate(gnorm):
            for j, tn in enumerate(tnorm):
                if _subset(gn, tn):
                    graph.add_edge(("g", i), ("t", j))
        mate = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=left)
        pairs = sorted((i, mate[("g", i)][1]) for _, i in left if ("g", i) in mate)
    used_g = {i for i, _ in pairs}
    used_t = {j for _, j in pairs}
    return Matching(
        [(gid[i], tid[j]) for i, j in pairs],
        [gid[i] for i in range(len(gen)) if i not in used_g],
        [tid[j] for j in range(len(kept)) if j not in used_t],
        len(gen),
        len(kept),
        skipped,
        cfg.mode,
    )


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p > 0 and r > 0 else 0.0


def precision_recall_f1(matching: Matching) -> tuple[float, float, float]:
    """p = matches / generated, r = matches / truth; an empty side scores 0."""
    m = len(matching.pairs)
    p = m / matching.n_generated if matching.n_generated else 0.0
    r = m / matching.n_truth if matching.n_truth else 0.0
    return p, r, _f1(p, r)


Evaluator = Callable[[Any, Mapping[str, Any]], bool]


def _inputs(case) -> dict:
    if isinstance(case, TestCase):
        return dict(case.assignments)
    return {k: v for k, v in case.items() if k != "id"}


def rule_coverage(generated: Sequence, rules: Iterable[Rule], evaluator: Evaluator = satisfies) -> dict[int, int]:
    """Number of generated cases whose inputs satisfy each rule's condition."""
    inputs = [_inputs(c) for c in generated]
    return {r.id: sum(1 for a in inputs if evaluator(r.condition, a)) for r in rules}


def bsc(
    generated: Sequence,
    rules: Iterable[Rule],
    scenarios: Sequence[Scenario],
    evaluator: Evaluator = satisfies,
) -> float | None:
    """Share of scenarios whose every member rule is exercised by some case.

    ``None`` when there are no scenarios, so that an empty denominator is
    not mistaken for zero coverage.
    """
    if not scenarios:
        return None
    coverage = rule_coverage(generated, rules, evaluator)
    covered = sum(1 for s in scenarios if all(coverage.get(rid, 0) > 0 for rid in s.member_rules))
    return covered / len(scenarios)


def token_prf(generated_text: str, truth_text: str, unit: str = "token") -> tuple[float, float, float]:
    """Multiset overlap of lexer tokens (``token``) or plain words (``word``)."""
    if unit == "token":
        split = token_texts
    elif unit == "word":
        split = _WORD.findall
    else:
        raise ValueError(f"unknown unit {unit!r}")
    g, t = Counter(split(generated_text)), Counter(split(truth_text))
    ng, nt = sum(g.values()), sum(t.values())
    if not ng and not nt:
        return 1.0, 1.0, 1.0
    common = sum((g & t).values())
    p = common / ng if ng else 0.0
    r = common / nt if nt else 0.0
    return p, r, _f1(p, r)


def usage_report(
    stats: Iterable[CallRecord | tuple[str, UsageStats]],
    prices: Mapping[str, tuple[float, float]] | None = None,
) -> dict:
    """Token totals per provider and overall, priced per million tokens.

    *stats* holds call records or ``(provider, UsageStats)`` pairs.  A
    provider without a price entry is costed at zero.
    """
    prices = prices or {}
    for name, (pin, pout) in prices.items():
        if pin < 0 or pout < 0:
            raise ValueError(f"negative price for {name}")
    per: dict[str, UsageStats] = {}
    for item in stats:
        name, usage = (item.provider, item.usage) if isinstance(item, CallRecord) else item
        per[name] = per.get(name, UsageStats()) + UsageStats(usage.prompt_tokens, usage.completion_tokens, usage.calls)
    out = {"providers": {}, "total": None}
    total = UsageStats()
    for name in sorted(per):
        u = per[name]
        pin, pout = prices.get(name, (0.0, 0.0))
        priced = UsageStats(u.prompt_tokens, u.completion_tokens, u.calls, (u.prompt_tokens * pin + u.completion_tokens * pout) / 1_000_000)
        out["providers"][name] = priced.to_dict()
        total = total + priced
    out["total"] = total.to_dict()
    return out


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    matching: Matching
    bsc: float | None = None
    coverage: dict[int, int] = field(default_factory=dict)
    subset: tuple[float, float, float] | None = None

    def to_dict(self) -> dict:
        d = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "bsc": self.bsc,
            "mode": self.matching.mode,
            "matched": [list(p) for p in self.matching.pairs],
            "unmatched_generated": self.matching.unmatched_generated,
            "unmatched_truth": self.matching.unmatched_truth,
            "skipped_truth": self.matching.skipped_truth,
            "empty_generated": self.matching.n_generated == 0,
            "rule_coverage": {str(k): v for k, v in self.coverage.items()},
        }
        if self.subset is not None:
            d["subset"] = dict(zip(("precision", "recall", "f1"), self.subset))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        fmt = lambda x: "n/a" if x is None else f"{x:.3f}"
        rows = [
            ("precision", fmt(self.precision)),
            ("recall", fmt(self.recall)),
            ("f1", fmt(self.f1)),
            ("bsc", fmt(self.bsc)),
            ("matched", f"{len(self.matching)} of {self.matching.n_generated} generated / {self.matching.n_truth} truth"),
        ]
        if self.subset is not None:
            rows.append(("subset f1", fmt(self.subset[2])))
        lines = [f"{k:<12} {v}" for k, v in rows]
        if self.coverage:
            lines.append("")
            lines.append("rule  cases")
            lines += [f"{rid:<5} {n}" for rid, n in self.coverage.items()]
        return "\n".join(lines) + "\n"


def evaluate(
    generated: Sequence,
    truth: Sequence[Mapping],
    rules: Iterable[Rule] = (),
    scenarios: Sequence[Scenario] = (),
    cfg: MatchConfig | None = None,
    evaluator: Evaluator = satisfies,
) -> EvalReport:
    """Exact-mode scores, subset-mode scores alongside, coverage and BSC."""
    cfg = cfg or MatchConfig()
    rules = list(rules)
    matching = match_cases(generated, truth, cfg)
    p, r, f = precision_recall_f1(matching)
    other = MatchConfig(**{**cfg.__dict__, "mode": "subset" if cfg.mode == "exact" else "exact"})
    alt = precision_recall_f1(match_cases(generated, truth, other))
    return EvalReport(
        p,
        r,
        f,
        matching,
        bsc(generated, rules, scenarios, evaluator) if rules else None,
        rule_coverage(generated, rules, evaluator),
        alt if cfg.mode == "exact" else None,
    )
