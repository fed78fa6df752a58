"""Knowledge explication and the verify-feedback-refine loops."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

from ..knowledge.constraints import ConstraintSet, parse_constraints_text
from ..knowledge.metamodel import validate
from ..knowledge.plantuml import PlantUMLError, from_plantuml
from ..knowledge.representation import parse_representation_text
from ..testability import Verdict, Violation
from ..trl import ParseDiagnostic, Rule, RuleSet, parse_rules, render_rule
from .prompts import (
    CONSTRAINTS,
    FORMALIZE,
    METAMODEL,
    REPRESENTATION,
    TESTABILITY,
    build_prompt,
    with_feedback,
    with_reformat_request,
)
from .providers import AuditLog, ProviderError, UsageLedger, UsageStats, complete
from .retrieval import RetrievalIndex, build_index, retrieve

log = logging.getLogger(__name__)

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.S)


def extract_code(text: str) -> str:
    """Contents of the fenced code blocks in *text*, or *text* itself."""
    blocks = _FENCE.findall(text)
    return "\n".join(b.strip("\n") for b in blocks) if blocks else text


def _symbols(knowledge):
    rep = knowledge["representation"] if isinstance(knowledge, dict) else knowledge.representation
    return rep.symbols


def _errors(diags: Sequence[ParseDiagnostic]) -> int:
    return sum(d.is_error for d in diags)


def formalize_with_feedback(
    provider,
    knowledge: Any,
    rule_text: str,
    max_iters: int = 3,
    *,
    retrieved: Sequence = (),
    strict_keys: bool = False,
    ledger: UsageLedger | None = None,
    audit: AuditLog | None = None,
    source_name: str = "",
) -> tuple[RuleSet, list[ParseDiagnostic], UsageStats]:
    """Formalize *rule_text*, re-prompting with parser diagnostics on errors.

    Issues at most *max_iters* completions and returns the attempt with the
    fewest error diagnostics (the earliest on ties).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    symbols = _symbols(knowledge)
    base = build_prompt(FORMALIZE, knowledge, retrieved, rule_text)
    prompt = base
    usage = UsageStats()
    best: tuple[RuleSet, list[ParseDiagnostic]] | None = None
    for attempt in range(max_iters):
        text, u = complete(provider, prompt, ledger=ledger, stage="formalize", audit=audit)
        usage = usage + u
        rules, diags = parse_rules(extract_code(text), symbols, strict_keys, source_name)
        if not len(rules) and not _errors(diags):
            diags = diags + [ParseDiagnostic(1, 1, "no rule found in the answer", ("rule",))]
        if best is None or _errors(diags) < _errors(best[1]):
            best = (rules, diags)
        if not _errors(diags):
            break
        log.info("formalize attempt %d: %d errors", attempt + 1, _errors(diags))
        prompt = with_feedback(base, [d for d in diags if d.is_error])
    assert best is not None
    return best[0], best[1], usage


def judge_and_refine(
    provider,
    constraints: ConstraintSet,
    rule: Rule,
    local_violations: Sequence[Violation],
    max_iters: int = 3,
    *,
    knowledge: Any,
    check: Callable[[Rule], list[Violation]],
    ledger: UsageLedger | None = None,
    audit: AuditLog | None = None,
) -> Verdict:
    """Try to repair a rule one violated constraint at a time.

    Each attempt targets the first violated constraint of the current
    candidate; a parsed refinement becomes the new candidate.  The first
    candidate that passes *check* is accepted as ``refined``; otherwise the
    rule is excluded for review with its original violations.
    """
    if not local_violations:
        return Verdict(rule.id, True, (), "accepted")
    symbols = _symbols(knowledge)
    candidate, violations = rule, list(local_violations)
    notes = []
    for attempt in range(max_iters):
        cid = violations[0].constraint_id
        target = constraints.get(cid)
        if target is None:
            notes.append(f"no refinement prompt for {cid}")
            break
        details = "\n".join(f"- {v.detail}" for v in violations if v.constraint_id == cid)
        prompt = build_prompt(
            TESTABILITY, knowledge, (), render_rule(candidate) + "\n\nReported problems:\n" + details, constraint=target
        )
        text, _ = complete(provider, prompt, ledger=ledger, stage="refine", audit=audit)
        if text.strip().upper().startswith("UNREFINABLE"):
            notes.append(f"attempt {attempt + 1}: declared unrefinable")
            break
        parsed, diags = parse_rules(extract_code(text), symbols)
        if len(parsed) != 1 or _errors(diags):
            notes.append(f"attempt {attempt + 1}: refinement did not parse as one rule")
            continue
        refined = Rule(rule.id, parsed.rules[0].condition, parsed.rules[0].outcome)
        remaining = check(refined)
        if not remaining:
            return Verdict(rule.id, True, (), "refined", refined, tuple(notes))
        notes.append(f"attempt {attempt + 1}: {len(remaining)} violations remain")
        candidate, violations = refined, remaining
    return Verdict(rule.id, False, tuple(local_violations), "excluded-for-review", notes=tuple(notes))


# ---------------------------------------------------------------------------
# explication

_QUERIES = {
    "metamodel": "rule condition operation action result trading quantity price time actor",
    "representation": "if then condition operation result value shall must",
    "constraints": "",
}


class ExplicationError(RuntimeError):
    def __init__(self, failures: dict[str, str]):
        self.failures = failures
        super().__init__("all providers failed: " + "; ".join(f"{k}: {v}" for k, v in failures.items()))


@dataclass
class ExplicationResult:
    kind: str
    artifacts: list[tuple[str, Any]] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)

    @property
    def values(self) -> list[Any]:
        return [a for _, a in self.artifacts]


def _extract_plantuml(text: str) -> str:
    m = re.search(r"@startuml.*?@enduml", text, re.S)
    if not m:
        raise ValueError("no @startuml ... @enduml block")
    return m.group(0)


def parse_artifact(kind: str, text: str, provenance: str = ""):
    """Turn a completion into a meta-model, representation or constraint set."""
    if kind == "metamodel":
        try:
            model = from_plantuml(_extract_plantuml(text))
        except PlantUMLError as exc:
            raise ValueError(str(exc)) from exc
        problems = validate(model)
        if problems:
            raise ValueError(problems[0])
        if not model.elements:
            raise ValueError("meta-model has no leaf elements")
        return replace(model, provenance=provenance)
    if kind == "representation":
        return parse_representation_text(text, provenance)
    if kind == "constraints":
        return parse_constraints_text(text, provenance)
    raise ValueError(f"unknown artifact kind {kind!r}")


def explicate(
    providers: Sequence,
    kind: str,
    docs: dict[str, str],
    cases: dict[str, str],
    *,
    knowledge: Any = None,
    top_k: int = 8,
    max_in_flight: int = 4,
    ledger: UsageLedger | None = None,
    audit: AuditLog | None = None,
) -> ExplicationResult:
    """Ask every provider for one artifact of *kind*.

    A provider whose answer does not parse gets one reformat request; a
    provider that still fails is recorded in ``failures`` while the others
    continue.  Raises :class:`ExplicationError` when every provider fails.
    """
    if not providers:
        raise ValueError("explicate needs at least one provider")
    template = {"metamodel": METAMODEL, "representation": REPRESENTATION, "constraints": CONSTRAINTS}.get(kind)
    if template is None:
        raise ValueError(f"unknown artifact kind {kind!r}")
    index: RetrievalIndex = build_index({**{f"doc:{k}": v for k, v in docs.items()}, **{f"case:{k}": v for k, v in cases.items()}})
    query = _QUERIES[kind] + " " + " ".join(cases.values())
    chunks = retrieve(index, query, top_k) if query.strip() else []
    prompt = build_prompt(template, knowledge, chunks)

    def one(provider):
        name = provider.config.name
        text, _ = complete(provider, prompt, ledger=ledger, stage=f"explicate-{kind}", audit=audit)
        try:
            return parse_artifact(kind, text, name)
        except ValueError as exc:
            log.info("%s: %s artifact unparseable (%s); asking to reformat", name, kind, exc)
            retry = with_reformat_request(prompt, str(exc))
            text, _ = complete(provider, retry, ledger=ledger, stage=f"explicate-{kind}", audit=audit)
            return parse_artifact(kind, text, name)

    def guarded(provider):
        try:
            return provider.config.name, one(provider), None
        except (ProviderError, ValueError) as exc:
            return provider.config.name, None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max(1, min(max_in_flight, len(providers)))) as pool:
        outcomes = list(pool.map(guarded, providers))
    result = ExplicationResult(kind)
    for name, artifact, error in outcomes:
        if error is None:
            result.artifacts.append((name, artifact))
        else:
            result.failures[name] = error
    if not result.artifacts:
        raise ExplicationError(result.failures)
    return result
