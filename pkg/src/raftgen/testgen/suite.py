"""Whole-ruleset generation and the suite file formats."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..trl import (
    Boolean,
    Number,
    Rule,
    RuleSet,
    String,
    StringList,
    Time,
    atoms,
    base_key,
    render_expr,
)
from .cases import POLARITIES, GenerationError, Strategy, TestCase, generate_cases
from .partition import Domains, PartitionError
from .scenarios import Scenario, build_scenarios, scenario_of

EXPECTED_PREFIX = "Expected"


@dataclass
class Suite:
    cases: list[TestCase] = field(default_factory=list)
    scenarios: list[Scenario] = field(default_factory=list)
    errors: dict[int, str] = field(default_factory=dict)

    def __iter__(self):
        # allows ``cases, scenarios = generate_suite(...)``
        return iter((self.cases, self.scenarios))

    def for_rule(self, rule_id: int) -> list[TestCase]:
        return [c for c in self.cases if c.rule_id == rule_id]


def observed_values(rules: Iterable[Rule]) -> dict[str, tuple[str, ...]]:
    """String values each condition key takes anywhere in the ruleset."""
    seen: dict[str, dict[str, None]] = {}
    for rule in rules:
        for a in atoms(rule.condition):
            if isinstance(a.value, String):
                seen.setdefault(base_key(a.key), {})[a.value.text] = None
            elif isinstance(a.value, StringList):
                for item in a.value.items:
                    seen.setdefault(base_key(a.key), {})[item] = None
    return {k: tuple(v) for k, v in seen.items()}


def generate_suite(
    rules: RuleSet | Sequence[Rule],
    symbols=None,
    domains: Domains | None = None,
    strategy: Strategy | None = None,
    workers: int = 1,
) -> Suite:
    """Cases for every rule, deduplicated and grouped by scenario.

    A rule whose condition cannot be satisfied is recorded in
    ``Suite.errors`` and skipped.  Output order and ids do not depend on
    *workers*.
    """
    rules = list(rules)
    if not rules:
        return Suite()
    observed = observed_values(rules)

    def one(rule: Rule):
        try:
            return generate_cases(rule, symbols, domains, strategy, observed), None
        except (GenerationError, PartitionError) as exc:
            return [], str(exc)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, rules))
    else:
        results = [one(r) for r in rules]

    scenarios = build_scenarios(rules)
    where = scenario_of(scenarios)
    member_pos = {rid: i for s in scenarios for i, rid in enumerate(s.member_rules)}
    polarity_rank = {p: i for i, p in enumerate(POLARITIES)}
    errors = {}
    collected = []
    for rule, (cases, error) in zip(rules, results):
        if error is not None:
            errors[rule.id] = error
        for c in cases:
            collected.append(replace(c, scenario_id=where[rule.id]))
    # stable sort keeps per-rule generation order inside each polarity
    collected.sort(key=lambda c: (c.scenario_id, member_pos[c.rule_id], polarity_rank[c.polarity]))
    # a negative of one rule can coincide with a positive of another; the
    # positive is kept so every rule retains its own satisfying case
    positive = {c.signature for c in collected if c.polarity != "negative"}
    seen = set()
    out = []
    for c in collected:
        if c.signature in seen or (c.polarity == "negative" and c.signature in positive):
            continue
        seen.add(c.signature)
        out.append(replace(c, id=len(out) + 1))
    return Suite(out, scenarios, errors)


# ---------------------------------------------------------------------------
# export


def json_value(value):
    if isinstance(value, Number):
        v = value.value
        return int(v) if v == v.to_integral_value() else float(v)
    if isinstance(value, Boolean):
        return value.value
    if isinstance(value, Time):
        return str(value)
    if isinstance(value, String):
        return value.text
    if isinstance(value, StringList):
        return list(value.items)
    return str(value)


def case_record(case: TestCase) -> dict:
    """Flat ``{"id", <inputs>..., "Result", ...}`` object for one case."""
    record = {"id": case.id}
    for key, value in case.assignments:
        record[key] = json_value(value)
    for key, value in case.expected:
        name = key if key not in record else EXPECTED_PREFIX + key
        record[name] = json_value(value)
    return record


def case_metadata(case: TestCase) -> dict:
    return {
        "id": case.id,
        "rule_id": case.rule_id,
        "scenario_id": case.scenario_id,
        "polarity": case.polarity,
        "mutated": [render_expr(l) for l in case.mutated],
    }


def suite_json(suite: Suite) -> str:
    return json.dumps([case_record(c) for c in suite.cases], indent=2, ensure_ascii=False) + "\n"


def metadata_json(suite: Suite) -> str:
    data = {
        "cases": [case_metadata(c) for c in suite.cases],
        "scenarios": [s.to_dict() for s in suite.scenarios],
        "errors": {str(k): v for k, v in sorted(suite.errors.items())},
    }
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def edge_list(scenarios: Sequence[Scenario]) -> str:
    """One ``# scenario`` header per scenario, then ``producer consumer key value``."""
    lines = []
    for s in scenarios:
        flag = " cyclic" if s.cyclic else ""
        lines.append(f"# scenario {s.id}: {' '.join(map(str, s.member_rules))}{flag}")
        lines += [f"{l.producer} {l.consumer} {l.key} {l.value}" for l in s.links]
    return "\n".join(lines) + ("\n" if lines else "")


def diagram_text(scenarios: Sequence[Scenario]) -> str:
    """PlantUML state diagram with one rule per state."""
    lines = ["@startuml"]
    for s in scenarios:
        lines.append(f'state "Scenario {s.id}" as S{s.id} {{')
        lines += [f"  state R{rid}" for rid in s.member_rules]
        for l in s.links:
            lines.append(f"  R{l.producer} --> R{l.consumer} : {l.key} = {l.value}")
        lines.append("}")
    lines.append("@enduml")
    return "\n".join(lines) + "\n"


def write_suite(suite: Suite, directory: str | Path) -> dict[str, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = {
        "cases.json": suite_json(suite),
        "cases.meta.json": metadata_json(suite),
        "scenarios.txt": edge_list(suite.scenarios),
        "scenarios.puml": diagram_text(suite.scenarios),
    }
    out = {}
    for name, text in files.items():
        (d / name).write_text(text, encoding="utf-8")
        out[name] = d / name
    return out


def read_cases(path: str | Path) -> list[dict]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list) or not all(isinstance(x, Mapping) for x in data):
        raise ValueError(f"{path}: expected a JSON array of objects")
    return data
